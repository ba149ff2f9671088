use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::polynomial::{HypercubePoint, RealPoint};

/// A ChaCha8 generator addressed by `(seed, stream)`.
///
/// The key is `ChaCha8Rng::seed_from_u64(seed)` and the 64-bit ChaCha stream
/// word is `stream`, so the same pair always reproduces the same draws and
/// distinct streams never overlap.
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A uniform vertex packed as a mask (bit `i` set iff `x_i = -1`).
    /// Consumes one `u64` per call; `n` must be at most 64.
    #[inline]
    pub fn bernoulli_mask(&mut self, n: usize) -> u64 {
        debug_assert!(n <= 64);
        let word = self.inner.next_u64();
        if n == 64 {
            word
        } else {
            word & ((1u64 << n) - 1)
        }
    }

    /// Fills `out` with uniform ±1 values, taking coordinate `i` from bit
    /// `i % 64` of the `i / 64`-th word drawn.
    pub fn fill_bernoulli(&mut self, out: &mut [f64]) {
        for chunk in out.chunks_mut(64) {
            let word = self.inner.next_u64();
            for (i, x) in chunk.iter_mut().enumerate() {
                *x = if word >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
        }
    }

    /// Standard normal draws (ziggurat sampler from `rand_distr`).
    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.inner.sample(StandardNormal);
        }
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// A uniform vertex of `{-1, +1}^n`.
pub fn sample_bernoulli(n: usize, rng: &mut StreamRng) -> HypercubePoint {
    let mut x = vec![0.0; n];
    rng.fill_bernoulli(&mut x);
    HypercubePoint::new(x.iter().map(|&v| v as i8).collect()).expect("±1 draws")
}

/// A standard Gaussian point of `R^n`.
pub fn sample_gaussian(n: usize, rng: &mut StreamRng) -> RealPoint {
    let mut x = vec![0.0; n];
    rng.fill_gaussian(&mut x);
    RealPoint::new(x).expect("finite draws")
}
