//! The two couplings built on `m`-runs in Bernoulli trials: local dependence
//! for the centered count, and the size-bias coupling for the raw count.
//!
//! Windows are circular throughout, so every index has exactly `2m−1`
//! dependent neighbours and `μ = n p^m` holds with no boundary terms.

use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CouplingSampler, MeanEstimate};
use crate::coupling::CouplingSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunsParams {
    pub n: u64,
    /// Run length `m >= 1`.
    pub m: u32,
    /// Success probability, strictly inside (0,1).
    pub p: f64,
    /// Circular indexing; the only supported convention.
    #[serde(default = "yes")]
    pub circular: bool,
}

fn yes() -> bool {
    true
}

impl RunsParams {
    pub fn new(n: u64, m: u32, p: f64) -> Result<Self> {
        let params = RunsParams {
            n,
            m,
            p,
            circular: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::domain("run length m must be >= 1"));
        }
        if self.n < 2 * u64::from(self.m) {
            return Err(Error::domain(format!(
                "n = {} must be >= 2m = {} so the 2m-1 neighbourhood has no wraparound overlap",
                self.n,
                2 * self.m
            )));
        }
        if !(0.0 < self.p && self.p < 1.0) {
            return Err(Error::domain(format!("p must be in (0,1), got {}", self.p)));
        }
        if !self.circular {
            return Err(Error::domain(
                "linear trials are not supported; circular indexing keeps mu = n p^m exact",
            ));
        }
        Ok(())
    }

    /// `‖X_j‖_{2k}` for the centered window indicator
    /// `X_j = ξ_j···ξ_{j+m−1} − p^m`, a two-point distribution.
    pub fn window_norm(&self, two_k: u32) -> f64 {
        let pm = self.p.powi(self.m as i32);
        let moment =
            pm * (1.0 - pm).powi(two_k as i32) + (1.0 - pm) * pm.powi(two_k as i32);
        moment.powf(1.0 / f64::from(two_k))
    }
}

/// Number of circular all-ones windows of length `m`.
pub fn window_count(bits: &[bool], m: u32) -> u64 {
    let n = bits.len();
    let mut count = 0u64;
    for j in 0..n {
        if (0..m as usize).all(|o| bits[(j + o) % n]) {
            count += 1;
        }
    }
    count
}

/// The size-bias recount: forces `ξ_i .. ξ_{i+m−1} := 1` and returns
/// `(W, W^s)`. Only the `2m−1` windows meeting the forced block are
/// recounted, which is also why `W^s − W ∈ [0, 2m−1]`.
pub fn size_bias_transform(bits: &[bool], i: usize, m: u32) -> (u64, u64) {
    let n = bits.len();
    let w = window_count(bits, m);
    let m_us = m as usize;
    let affected = |j: usize| -> bool {
        // windows j..j+m-1 that intersect the forced block i..i+m-1, circularly
        (0..m_us).any(|o| {
            let pos = (j + o) % n;
            (pos + n - i) % n < m_us
        })
    };
    let mut delta = 0i64;
    for off in 0..(2 * m_us - 1) {
        let j = (i + n - (m_us - 1) + off) % n;
        debug_assert!(affected(j));
        let before = (0..m_us).all(|o| bits[(j + o) % n]);
        let after = (0..m_us).all(|o| {
            let pos = (j + o) % n;
            bits[pos] || (pos + n - i) % n < m_us
        });
        delta += i64::from(after) - i64::from(before);
    }
    (w, (w as i64 + delta) as u64)
}

/// `E D = E(W^s − W)` for the size-bias m-runs coupling:
/// `1 + 2(p−p^m)/(1−p) − (2m−1)p^m`.
pub fn ed_size_bias(p: f64, m: u32) -> f64 {
    let pm = p.powi(m as i32);
    1.0 + 2.0 * (p - pm) / (1.0 - p) - f64::from(2 * m - 1) * pm
}

/// Exact variance of the centered circular window count for `n ≥ 2m`:
/// `n[(p^m − p^{2m}) + 2 Σ_{j=1}^{m−1} (p^{m+j} − p^{2m})]`.
pub fn runs_sigma_sq(n: u64, m: u32, p: f64) -> f64 {
    let pm = p.powi(m as i32);
    let mut per_site = pm - pm * pm;
    for j in 1..m {
        per_site += 2.0 * (p.powi((m + j) as i32) - pm * pm);
    }
    n as f64 * per_site
}

fn draw_bits(n: u64, p: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let dist = rand::distr::Bernoulli::new(p).expect("validated p");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Local dependence: `X_j = ξ_j···ξ_{j+m−1} − p^m`, `W = Σ X_j`,
/// `W′ = W − Σ_{j∈N_I} X_j` with `N_I` the `2m−1` windows meeting `I`,
/// and `G = −n X_I`.
pub struct LocalDependenceRunsSampler {
    params: RunsParams,
}

impl LocalDependenceRunsSampler {
    pub fn new(params: &RunsParams) -> Result<Self> {
        params.validate()?;
        Ok(LocalDependenceRunsSampler { params: *params })
    }
}

impl CouplingSampler for LocalDependenceRunsSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> CouplingSample {
        let RunsParams { n, m, p, .. } = self.params;
        let i = rng.random_range(0..n) as usize;
        let bits = draw_bits(n, p, rng);
        let pm = p.powi(m as i32);
        let total = window_count(&bits, m);
        let w = total as f64 - n as f64 * pm;

        let n_us = n as usize;
        let m_us = m as usize;
        // the 2m-1 windows whose index is within m-1 of I, circularly
        let mut in_nbhd = 0u64;
        for off in 0..(2 * m_us - 1) {
            let j = (i + n_us - (m_us - 1) + off) % n_us;
            if (0..m_us).all(|o| bits[(j + o) % n_us]) {
                in_nbhd += 1;
            }
        }
        let outside = (total - in_nbhd) as f64 - (n as f64 - f64::from(2 * m - 1)) * pm;
        let x_i = f64::from(u8::from((0..m_us).all(|o| bits[(i + o) % n_us]))) - pm;
        CouplingSample::exact(w, outside, -(n as f64) * x_i)
    }

    fn mean(&self) -> MeanEstimate {
        MeanEstimate::Exact(0.0)
    }

    fn variance(&self) -> Option<f64> {
        Some(runs_sigma_sq(self.params.n, self.params.m, self.params.p))
    }
}

/// Size-bias coupling for the raw window count: `W′ = W^s`, `G = μ = n p^m`.
pub struct SizeBiasRunsSampler {
    params: RunsParams,
    mu: f64,
}

impl SizeBiasRunsSampler {
    pub fn new(params: &RunsParams) -> Result<Self> {
        params.validate()?;
        Ok(SizeBiasRunsSampler {
            params: *params,
            mu: params.n as f64 * params.p.powi(params.m as i32),
        })
    }
}

impl CouplingSampler for SizeBiasRunsSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> CouplingSample {
        let RunsParams { n, m, p, .. } = self.params;
        let i = rng.random_range(0..n) as usize;
        let bits = draw_bits(n, p, rng);
        let (w, w_s) = size_bias_transform(&bits, i, m);
        CouplingSample::exact(w as f64, w_s as f64, self.mu)
    }

    fn mean(&self) -> MeanEstimate {
        MeanEstimate::Exact(self.mu)
    }

    fn variance(&self) -> Option<f64> {
        // sigma^2 = E(GD) = mu E D for the exact coupling with constant G
        Some(self.mu * ed_size_bias(self.params.p, self.params.m))
    }
}
