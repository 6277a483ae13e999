//! Dynamic functional connectivity classification library.
//!
//! Pipeline: ROI time series -> sliding-window correlation sequences
//! ([`chronnectome`]) -> recurrent sequence classifiers ([`recurrent`],
//! [`training`]) or classical baselines ([`baselines`]), scored under a
//! subject-grouped cross-validation protocol ([`evaluation`]). [`datagen`]
//! builds synthetic corpora with known ground truth for end-to-end checks.

pub mod baselines;
pub mod chronnectome;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod recurrent;
pub mod training;

pub use error::{Error, Result};
