//! Seeded random streams and the scalar samplers used by the generator.
//!
//! A stream is identified by a root seed and a slash-separated label path.
//! The pair is hashed (SHA-256) into the 256-bit key of a ChaCha8 block
//! cipher, so draws are a pure function of `(root_seed, label)` and of how
//! many values were consumed. Child streams are keyed from the root seed and
//! the extended label, never from the parent's state, which keeps parallel
//! workers reproducing the serial result.
//!
//! Every sampler consumes a fixed number of uniforms that does not depend on
//! its parameters (the Gaussian sampler uses rejection, but the accepted
//! pair is parameter-free). Two populations generated from the same stream
//! with different knobs therefore share their underlying noise.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    label: String,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(root_seed: u64, label: impl Into<String>) -> Self {
        let label = label.into();
        let mut hasher = Sha256::new();
        hasher.update(root_seed.to_le_bytes());
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        RngStream {
            root_seed,
            label,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Independent stream for `self.label + "/" + child`, starting fresh.
    pub fn derive(&self, child: &str) -> RngStream {
        let label = if self.label.is_empty() {
            child.to_string()
        } else {
            format!("{}/{}", self.label, child)
        };
        RngStream::new(self.root_seed, label)
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (Lemire's multiply-shift with rejection).
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_index on empty range");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.inner.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

// Marker only; needed by APIs that insist on a CryptoRng bound. Not a
// security claim.
impl CryptoRng for RngStream {}

/// Logistic function, evaluated on the branch that cannot overflow.
pub fn sigmoid(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("sigmoid of non-finite value {x}")));
    }
    Ok(sigmoid_unchecked(x))
}

#[inline]
pub(crate) fn sigmoid_unchecked(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("probability {p} outside [0, 1]")))
    }
}

pub fn sample_bernoulli(p: f64, rng: &mut RngStream) -> Result<u8> {
    check_probability(p)?;
    Ok(bernoulli_unchecked(p, rng))
}

#[inline]
pub(crate) fn bernoulli_unchecked(p: f64, rng: &mut RngStream) -> u8 {
    // p = 1 must always succeed; u is in [0, 1) so `u < 1` holds.
    u8::from(rng.next_f64() < p)
}

/// Normal draw via the Marsaglia polar method; the second variate of each
/// accepted pair is discarded so the stream carries no cached state.
pub fn sample_gaussian(mu: f64, sigma: f64, rng: &mut RngStream) -> Result<f64> {
    if sigma < 0.0 || !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::invalid(format!(
            "gaussian needs finite mu and sigma >= 0, got mu={mu}, sigma={sigma}"
        )));
    }
    Ok(gaussian_unchecked(mu, sigma, rng))
}

#[inline]
pub(crate) fn gaussian_unchecked(mu: f64, sigma: f64, rng: &mut RngStream) -> f64 {
    mu + sigma * standard_normal(rng)
}

fn standard_normal(rng: &mut RngStream) -> f64 {
    loop {
        let u = 2.0 * rng.next_f64() - 1.0;
        let v = 2.0 * rng.next_f64() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Sum of `k` independent Bernoulli(p) trials.
pub fn sample_binomial(k: u32, p: f64, rng: &mut RngStream) -> Result<u32> {
    if k == 0 {
        return Err(Error::invalid("binomial needs K >= 1"));
    }
    check_probability(p)?;
    Ok(binomial_unchecked(k, p, rng))
}

#[inline]
pub(crate) fn binomial_unchecked(k: u32, p: f64, rng: &mut RngStream) -> u32 {
    (0..k).map(|_| u32::from(bernoulli_unchecked(p, rng))).sum()
}
