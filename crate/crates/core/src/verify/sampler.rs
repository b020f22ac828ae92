use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::tensor::Mat;

/// Seeded sampler. Sample `i` draws from its own ChaCha stream, so results
/// do not depend on evaluation order or thread count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub count: usize,
    /// Magnitudes are `exp(U[mag_lo, mag_hi])`.
    pub mag_lo: f64,
    pub mag_hi: f64,
    pub dim: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 100_000,
            mag_lo: -6.0,
            mag_hi: 6.0,
            dim: 3,
        }
    }
}

impl SamplerConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            ..Self::default()
        }
    }

    /// Sampler settings from a run configuration, with `seed` taking
    /// precedence over the configured one.
    pub fn from_run_config(cfg: &RunConfig, seed: Option<u64>) -> Result<Self> {
        let d = Self::default();
        let s = cfg.sampler.unwrap_or(crate::config::SamplerSection {
            count: None,
            mag_lo: None,
            mag_hi: None,
            dim: None,
        });
        let out = Self {
            seed: seed.or(cfg.seed).unwrap_or(d.seed),
            count: s.count.unwrap_or(d.count),
            mag_lo: s.mag_lo.unwrap_or(d.mag_lo),
            mag_hi: s.mag_hi.unwrap_or(d.mag_hi),
            dim: s.dim.unwrap_or(d.dim),
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Parameter("sampler count must be >= 1".into()));
        }
        if !(self.mag_lo < self.mag_hi) || !self.mag_lo.is_finite() || !self.mag_hi.is_finite() {
            return Err(Error::Parameter(format!(
                "sampler magnitude range [{}, {}] is empty",
                self.mag_lo, self.mag_hi
            )));
        }
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Parameter(format!(
                "sampler dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        Ok(())
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    /// Generator for sample `index` of stream `stream`.
    pub fn rng(&self, stream: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng.set_stream(index);
        rng
    }

    /// `exp(U[mag_lo, mag_hi])`.
    pub fn magnitude(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(self.mag_lo..self.mag_hi).exp()
    }

    /// Matrix with i.i.d. entries `N(0, 1) exp(U[mag_lo, mag_hi])`.
    pub fn matrix(&self, rng: &mut ChaCha8Rng) -> Mat {
        let d = self.dim;
        let mut e = [0.0; 9];
        for x in e.iter_mut().take(d * d) {
            let n: f64 = rng.sample(StandardNormal);
            *x = n * self.magnitude(rng);
        }
        Mat::from_row_major(d, &e[..d * d]).expect("finite entries of a supported dimension")
    }

    /// Matrix pair for sample `index`.
    pub fn pair(&self, stream: u64, index: u64) -> (Mat, Mat) {
        let mut rng = self.rng(stream, index);
        let p = self.matrix(&mut rng);
        let q = self.matrix(&mut rng);
        (p, q)
    }
}
