use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::ComplexSample;
use crate::{Error, Result};

/// A deterministic random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8: the seed is expanded into the cipher key and the
/// stream id selects the 64-bit nonce, so streams with different ids never
/// overlap. Every sampler below consumes a fixed number of 64-bit words per
/// draw, which keeps sequences identical across platforms and releases.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream whose key is derived from this stream's identity.
    ///
    /// Does not advance `self`; children with distinct `child_id` are independent.
    pub fn child(&self, child_id: u64) -> RngStream {
        RngStream::new(derive_seed(self.seed, self.stream_id), child_id)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` from the top 53 bits of one word.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform in `(0, 1]`.
    #[inline]
    pub fn uniform_open_low(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * INV_2_53
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased integer in `[0, n)` by rejection; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// `true` with probability `p`. Always consumes one word.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Two independent N(0,1) draws via Box-Muller (cosine branch first).
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open_low();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TWO_PI * u2).sin_cos();
        (r * c, r * s)
    }

    /// One N(0,1) draw; consumes a full Box-Muller pair.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    /// N(mean, sd^2).
    #[inline]
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// One CN(0, variance) draw: real and imaginary parts N(0, variance/2).
    #[inline]
    pub fn complex_gaussian(&mut self, variance: f64) -> ComplexSample {
        let (a, b) = self.normal_pair();
        let s = (0.5 * variance).sqrt();
        ComplexSample::new(a * s, b * s)
    }
}

/// SplitMix64-style mixing of a `(seed, id)` pair into a new seed.
pub fn derive_seed(seed: u64, id: u64) -> u64 {
    let mut z = seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` i.i.d. N(0,1) draws, produced pairwise; an odd tail discards its sine branch.
pub fn sample_standard_normal(rng: &mut RngStream, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() + 1 < n {
        let (a, b) = rng.normal_pair();
        out.push(a);
        out.push(b);
    }
    if out.len() < n {
        out.push(rng.normal_pair().0);
    }
    out
}

/// `n` i.i.d. CN(0, variance) draws.
pub fn sample_complex_gaussian(
    rng: &mut RngStream,
    n: usize,
    variance: f64,
) -> Result<Vec<ComplexSample>> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::Domain(format!(
            "complex Gaussian variance must be positive and finite, got {variance}"
        )));
    }
    Ok((0..n).map(|_| rng.complex_gaussian(variance)).collect())
}
