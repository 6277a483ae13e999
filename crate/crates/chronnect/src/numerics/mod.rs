//! Dense-matrix arithmetic, deterministic seeded randomness, and the small
//! statistical primitives shared by every other module.

mod matrix;
mod rng;
mod stats;

pub use matrix::{axpy, dot, Matrix};
pub use rng::Rng;
pub use stats::{
    mean, pearson, population_variance, sigmoid, softmax, tanh_act, two_sample_t,
};
