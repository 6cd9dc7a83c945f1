//! Moment orders, exact normal-moment constants, and empirical r-norms.
//!
//! The r-norm of a random variable is `‖X‖_r = (E|X|^r)^{1/r}`. Everything
//! here is evaluated in log-space where overflow is possible, so that orders
//! in the hundreds of thousands remain accurate.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A validated moment order `r ≥ 1`.
///
/// Even/odd preconditions are checked once here at the boundary; operations
/// that only accept even orders call [`MomentOrder::require_even`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct MomentOrder(u32);

impl MomentOrder {
    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::domain("moment order must be >= 1"));
        }
        Ok(MomentOrder(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    /// Fails unless the order is even (the `2k` of the moment theorems).
    pub fn require_even(self) -> Result<Self> {
        if self.0 % 2 != 0 {
            return Err(Error::domain(format!(
                "order {} is odd; this operation needs an even order 2k",
                self.0
            )));
        }
        Ok(self)
    }

    /// Half the order, valid after `require_even`.
    pub fn half(self) -> u32 {
        self.0 / 2
    }
}

impl TryFrom<u32> for MomentOrder {
    type Error = Error;
    fn try_from(value: u32) -> Result<Self> {
        MomentOrder::new(value)
    }
}

impl From<MomentOrder> for u32 {
    fn from(o: MomentOrder) -> u32 {
        o.0
    }
}

impl std::fmt::Display for MomentOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `‖N‖_{2k}` for `N` standard normal: `((2k)!/(k! 2^k))^{1/(2k)}`.
///
/// Evaluated as `exp{(lnΓ(2k+1) − lnΓ(k+1) − k ln 2)/(2k)}`, which stays
/// accurate for `two_k` up to 10^6.
pub fn normal_abs_norm(two_k: MomentOrder) -> Result<f64> {
    let two_k = two_k.require_even()?.value();
    let k = f64::from(two_k / 2);
    let log_moment = ln_gamma(f64::from(two_k) + 1.0) - ln_gamma(k + 1.0) - k * 2f64.ln();
    Ok((log_moment / f64::from(two_k)).exp())
}

/// Internal convenience: `‖N‖_{2k}` for `k ≥ 1` without re-validating.
pub(crate) fn normal_norm_2k(k: u32) -> f64 {
    debug_assert!(k >= 1);
    let kf = f64::from(k);
    let log_moment = ln_gamma(2.0 * kf + 1.0) - ln_gamma(kf + 1.0) - kf * 2f64.ln();
    (log_moment / (2.0 * kf)).exp()
}

/// `c₁(k) = √(2k−1)/‖N‖_{2k}`, increasing in `k` from 1 towards `√e`.
pub fn c1(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("c1 requires k >= 1"));
    }
    Ok((2.0 * f64::from(k) - 1.0).sqrt() / normal_norm_2k(k))
}

/// Neumaier-compensated sum; deterministic for a fixed input order and
/// permutation-stable to ~1 ulp for well-scaled inputs.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Empirical r-norm `((1/n) Σ |x_i|^r)^{1/r}`.
///
/// Uses compensated summation; switches to a log-sum-exp path when any
/// `|x_i|^r` would overflow `f64`.
pub fn empirical_norm(samples: &[f64], order: MomentOrder) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("empirical_norm needs a non-empty sample"));
    }
    let r = f64::from(order.value());
    let max_abs = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max_abs == 0.0 {
        return Ok(0.0);
    }
    let n = samples.len() as f64;
    // |x|^r overflows once r·ln|x| passes ~709.78.
    if r * max_abs.ln() < 700.0 {
        let mean = compensated_sum(samples.iter().map(|x| x.abs().powf(r))) / n;
        Ok(mean.powf(1.0 / r))
    } else {
        // log-sum-exp over r·ln|x_i|, shifted by the max term
        let shift = r * max_abs.ln();
        let scaled = compensated_sum(samples.iter().map(|x| {
            let a = x.abs();
            if a == 0.0 {
                0.0
            } else {
                (r * a.ln() - shift).exp()
            }
        }));
        let log_mean = shift + scaled.ln() - n.ln();
        Ok((log_mean / r).exp())
    }
}
