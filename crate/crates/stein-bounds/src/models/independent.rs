//! The independent-sum coupling `(W, W−X_I, −nX_I)` for `W = Σ X_i` with
//! i.i.d. mean-zero summands.

use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CouplingSampler, MeanEstimate};
use crate::coupling::CouplingSample;
use crate::error::{Error, Result};

/// Mean-zero summand families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summand {
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// `Bernoulli(p) − p`.
    CenteredBernoulli { p: f64 },
    /// `Exponential(rate) − 1/rate`.
    CenteredExponential { rate: f64 },
}

impl Summand {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Summand::Rademacher => Ok(()),
            Summand::CenteredBernoulli { p } => {
                if !(0.0 < p && p < 1.0) {
                    Err(Error::domain(format!("bernoulli p must be in (0,1), got {p}")))
                } else {
                    Ok(())
                }
            }
            Summand::CenteredExponential { rate } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    Err(Error::domain(format!("exponential rate must be > 0, got {rate}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            Summand::Rademacher => 1.0,
            Summand::CenteredBernoulli { p } => (p * (1.0 - p)).sqrt(),
            Summand::CenteredExponential { rate } => 1.0 / rate,
        }
    }

    /// `‖X‖_{2k}` exactly.
    ///
    /// For the centered exponential the `2k`-th central moment of
    /// `Exp(1)` is the subfactorial `!(2k)` (the derangement count).
    pub fn norm(&self, two_k: u32) -> Result<f64> {
        if two_k == 0 || two_k % 2 != 0 {
            return Err(Error::domain("summand norms are defined for even orders 2k >= 2"));
        }
        match *self {
            Summand::Rademacher => Ok(1.0),
            Summand::CenteredBernoulli { p } => {
                let q = 1.0 - p;
                let moment = p * q.powi(two_k as i32) + q * p.powi(two_k as i32);
                Ok(moment.powf(1.0 / f64::from(two_k)))
            }
            Summand::CenteredExponential { rate } => {
                if two_k > 20 {
                    return Err(Error::domain(
                        "centered exponential norms supported up to order 20",
                    ));
                }
                Ok(subfactorial(two_k).powf(1.0 / f64::from(two_k)) / rate)
            }
        }
    }

    /// `ρ_k = ‖X‖_{2k}/‖X‖₂`.
    pub fn rho(&self, k: u32) -> Result<f64> {
        Ok(self.norm(2 * k)? / self.std_dev())
    }
}

fn subfactorial(m: u32) -> f64 {
    // !m = m·!(m−1) + (−1)^m
    let mut value = 1.0f64; // !0
    for i in 1..=m {
        value = f64::from(i) * value + if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    value
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndependentSumParams {
    pub n: u64,
    pub summand: Summand,
}

pub struct IndependentSumSampler {
    n: u64,
    summand: Summand,
}

impl IndependentSumSampler {
    pub fn new(params: &IndependentSumParams) -> Result<Self> {
        if params.n == 0 {
            return Err(Error::domain("independent sum needs n >= 1"));
        }
        params.summand.validate()?;
        Ok(IndependentSumSampler {
            n: params.n,
            summand: params.summand,
        })
    }
}

impl CouplingSampler for IndependentSumSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> CouplingSample {
        let n = self.n;
        let i = rng.random_range(0..n);
        let (w, x_i) = match self.summand {
            Summand::Rademacher => {
                // one bit per summand: W = 2·popcount − n
                let words = n.div_ceil(64);
                let mut ones = 0u64;
                let mut x_i_bit = false;
                for wi in 0..words {
                    let mut word = rng.next_u64();
                    if wi == words - 1 && n % 64 != 0 {
                        word &= (1u64 << (n % 64)) - 1;
                    }
                    ones += u64::from(word.count_ones());
                    if wi == i / 64 {
                        x_i_bit = word >> (i % 64) & 1 == 1;
                    }
                }
                let w = 2.0 * ones as f64 - n as f64;
                (w, if x_i_bit { 1.0 } else { -1.0 })
            }
            Summand::CenteredBernoulli { p } => {
                let dist = rand::distr::Bernoulli::new(p).expect("validated p");
                let mut count = 0u64;
                let mut xi = false;
                for j in 0..n {
                    let b = dist.sample(rng);
                    count += u64::from(b);
                    if j == i {
                        xi = b;
                    }
                }
                let w = count as f64 - n as f64 * p;
                (w, f64::from(u8::from(xi)) - p)
            }
            Summand::CenteredExponential { rate } => {
                let dist = rand_distr::Exp::new(rate).expect("validated rate");
                let mut sum = 0.0f64;
                let mut xi = 0.0f64;
                for j in 0..n {
                    let x = dist.sample(rng) - 1.0 / rate;
                    sum += x;
                    if j == i {
                        xi = x;
                    }
                }
                (sum, xi)
            }
        };
        CouplingSample::exact(w, w - x_i, -(n as f64) * x_i)
    }

    fn mean(&self) -> MeanEstimate {
        MeanEstimate::Exact(0.0)
    }

    fn variance(&self) -> Option<f64> {
        Some(self.n as f64 * self.summand.std_dev().powi(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::replicate_rng;
    use approx::assert_relative_eq;

    #[test]
    fn summand_norms() {
        assert_eq!(Summand::Rademacher.norm(4).unwrap(), 1.0);
        // centered Bernoulli(1/2) is Rademacher/2
        let b = Summand::CenteredBernoulli { p: 0.5 };
        assert_relative_eq!(b.norm(6).unwrap(), 0.5, max_relative = 1e-14);
        // centered Exp(1): E X^2 = 1, E X^4 = !4 = 9
        let e = Summand::CenteredExponential { rate: 1.0 };
        assert_relative_eq!(e.norm(2).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(e.norm(4).unwrap(), 9f64.powf(0.25), max_relative = 1e-14);
        assert_relative_eq!(
            e.norm(12).unwrap(),
            176214841f64.powf(1.0 / 12.0),
            max_relative = 1e-12
        );
        assert!(e.norm(3).is_err());
    }

    #[test]
    fn g_equals_n_times_d() {
        let s = IndependentSumSampler::new(&IndependentSumParams {
            n: 17,
            summand: Summand::Rademacher,
        })
        .unwrap();
        for rep in 0..200 {
            let mut rng = replicate_rng(3, rep);
            let sample = s.sample(&mut rng);
            assert_eq!(sample.g, 17.0 * sample.d);
            assert_eq!(sample.r_term, 0.0);
            assert_eq!(sample.w_prime - sample.w, sample.d);
        }
    }

    #[test]
    fn rademacher_word_path_matches_law() {
        // n = 3: W in {-3,-1,1,3} with probabilities 1/8, 3/8, 3/8, 1/8
        let s = IndependentSumSampler::new(&IndependentSumParams {
            n: 3,
            summand: Summand::Rademacher,
        })
        .unwrap();
        let reps = 200_000u64;
        let mut counts = std::collections::HashMap::new();
        let mut e_gd = 0.0;
        for rep in 0..reps {
            let mut rng = replicate_rng(11, rep);
            let sample = s.sample(&mut rng);
            *counts.entry(sample.w as i64).or_insert(0u64) += 1;
            e_gd += sample.g * sample.d;
        }
        let p = |w: i64| *counts.get(&w).unwrap_or(&0) as f64 / reps as f64;
        let se = |prob: f64| (prob * (1.0 - prob) / reps as f64).sqrt();
        assert!((p(3) - 0.125).abs() < 4.0 * se(0.125));
        assert!((p(1) - 0.375).abs() < 4.0 * se(0.375));
        // E(GD) = sigma^2 = 3 for the exact coupling
        e_gd /= reps as f64;
        assert!((e_gd - 3.0).abs() < 0.1, "E(GD) = {e_gd}");
    }

    #[test]
    fn deterministic_streams() {
        let s = IndependentSumSampler::new(&IndependentSumParams {
            n: 100,
            summand: Summand::CenteredExponential { rate: 2.0 },
        })
        .unwrap();
        let a = s.sample(&mut replicate_rng(5, 9));
        let b = s.sample(&mut replicate_rng(5, 9));
        assert_eq!(a, b);
    }
}
