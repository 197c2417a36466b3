//! Random streams for chains.
//!
//! Every chain owns one ChaCha8 stream. The 256-bit key is expanded from the
//! 64-bit master seed with `SeedableRng::seed_from_u64` (a PCG32 expansion) and
//! the chain index selects the ChaCha stream id, so streams of different chains
//! in one ensemble never overlap.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// The two kinds of draws a transition consumes.
pub trait Draws {
    fn standard_normal(&mut self) -> f64;
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64;
}

impl<R: RngCore + ?Sized> Draws for R {
    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    fn uniform(&mut self) -> f64 {
        self.random::<f64>()
    }
}

/// Wraps a stream and counts how many draws of each kind were taken.
#[derive(Debug, Clone)]
pub struct CountingDraws<R> {
    inner: R,
    pub normals: u64,
    pub uniforms: u64,
}

impl<R: RngCore> CountingDraws<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, normals: 0, uniforms: 0 }
    }

    pub fn total(&self) -> u64 {
        self.normals + self.uniforms
    }

    pub fn into_inner(self) -> R {
        self.inner
    }
}

impl<R: RngCore> Draws for CountingDraws<R> {
    fn standard_normal(&mut self) -> f64 {
        self.normals += 1;
        self.inner.standard_normal()
    }

    fn uniform(&mut self) -> f64 {
        self.uniforms += 1;
        self.inner.uniform()
    }
}

/// Identifies the random stream of one chain: `(master seed, chain index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainSeed {
    pub master: u64,
    pub index: u64,
}

impl ChainSeed {
    pub fn new(master: u64, index: u64) -> Self {
        Self { master, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.index);
        rng
    }
}

impl From<u64> for ChainSeed {
    fn from(master: u64) -> Self {
        Self::new(master, 0)
    }
}
