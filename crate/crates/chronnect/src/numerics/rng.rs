use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random generator addressed by `(seed, stream)`.
///
/// Identical `(seed, stream)` pairs produce identical draw sequences on every
/// platform. Parallel work derives child generators with distinct stream ids
/// instead of sharing one generator.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Child generator on a different stream of the same seed. The child's
    /// sequence is independent of how much the parent has already drawn.
    pub fn derive(&self, stream: u64) -> Rng {
        Rng::new(self.seed, stream)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        Uniform::new(lo, hi).sample(&mut self.inner)
    }

    /// Standard normal draw via Box-Muller; two uniforms per call keeps the
    /// consumption pattern platform-independent.
    pub fn standard_normal(&mut self) -> f64 {
        let u1: f64 = self.uniform(f64::MIN_POSITIVE, 1.0);
        let u2: f64 = self.uniform(0.0, 1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.inner.gen_bool(p)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}
