//! The sample and parameter types shared by every coupling and bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One draw of `(W, W′, G, D, R)` from a Stein coupling.
///
/// `D = W′ − W` is always derived from the other two fields, so the stored
/// value is consistent to the last ulp of the subtraction. `R = 0` for exact
/// couplings, which covers every sampler built in to this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSample {
    pub w: f64,
    pub w_prime: f64,
    pub g: f64,
    pub d: f64,
    pub r_term: f64,
}

impl CouplingSample {
    /// An exact coupling draw (`R = 0`).
    pub fn exact(w: f64, w_prime: f64, g: f64) -> Self {
        CouplingSample {
            w,
            w_prime,
            g,
            d: w_prime - w,
            r_term: 0.0,
        }
    }

    /// An approximate coupling draw with remainder `r_term`.
    pub fn with_remainder(w: f64, w_prime: f64, g: f64, r_term: f64) -> Self {
        CouplingSample {
            w,
            w_prime,
            g,
            d: w_prime - w,
            r_term,
        }
    }
}

/// Deterministic inputs to the moment bounds: the norm bounds `A ≥ ‖G‖₂ₖ`,
/// `B ≥ ‖D‖₂ₖ`, the standard deviation `σ`, the remainder coefficients
/// `ε, ε′, ε₁..ε₄`, and the norms of the residual variables `T, T₁, T₂`.
///
/// All fields are non-negative and `eps < 1`; construct via
/// [`CouplingParams::builder`] (unset fields default to zero, the exact-coupling
/// case).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    pub a_norm: f64,
    pub b_norm: f64,
    pub sigma: f64,
    pub eps: f64,
    pub eps_prime: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub t_norm: f64,
    pub t1_norm: f64,
    pub t2_norm: f64,
}

impl CouplingParams {
    pub fn builder() -> CouplingParamsBuilder {
        CouplingParamsBuilder::default()
    }

    /// Parameters of an exact coupling: only `A`, `B`, `σ` set, all remainder
    /// terms zero.
    pub fn exact(a_norm: f64, b_norm: f64, sigma: f64) -> Result<Self> {
        Self::builder().a(a_norm).b(b_norm).sigma(sigma).build()
    }

    fn validate(self) -> Result<Self> {
        let fields = [
            ("a_norm", self.a_norm),
            ("b_norm", self.b_norm),
            ("sigma", self.sigma),
            ("eps", self.eps),
            ("eps_prime", self.eps_prime),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
            ("eps4", self.eps4),
            ("t_norm", self.t_norm),
            ("t1_norm", self.t1_norm),
            ("t2_norm", self.t2_norm),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "coupling parameter {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.eps >= 1.0 {
            return Err(Error::domain(format!("eps must be < 1, got {}", self.eps)));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CouplingParamsBuilder {
    params: RawParams,
}

#[derive(Debug, Clone, Copy)]
struct RawParams {
    a_norm: f64,
    b_norm: f64,
    sigma: f64,
    eps: f64,
    eps_prime: f64,
    eps1: f64,
    eps2: f64,
    eps3: f64,
    eps4: f64,
    t_norm: f64,
    t1_norm: f64,
    t2_norm: f64,
}

impl Default for RawParams {
    fn default() -> Self {
        RawParams {
            a_norm: 0.0,
            b_norm: 0.0,
            sigma: 0.0,
            eps: 0.0,
            eps_prime: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            eps3: 0.0,
            eps4: 0.0,
            t_norm: 0.0,
            t1_norm: 0.0,
            t2_norm: 0.0,
        }
    }
}

macro_rules! setter {
    ($name:ident, $field:ident) => {
        pub fn $name(mut self, v: f64) -> Self {
            self.params.$field = v;
            self
        }
    };
}

impl CouplingParamsBuilder {
    setter!(a, a_norm);
    setter!(b, b_norm);
    setter!(sigma, sigma);
    setter!(eps, eps);
    setter!(eps_prime, eps_prime);
    setter!(eps1, eps1);
    setter!(eps2, eps2);
    setter!(eps3, eps3);
    setter!(eps4, eps4);
    setter!(t, t_norm);
    setter!(t1, t1_norm);
    setter!(t2, t2_norm);

    pub fn build(self) -> Result<CouplingParams> {
        let p = self.params;
        CouplingParams {
            a_norm: p.a_norm,
            b_norm: p.b_norm,
            sigma: p.sigma,
            eps: p.eps,
            eps_prime: p.eps_prime,
            eps1: p.eps1,
            eps2: p.eps2,
            eps3: p.eps3,
            eps4: p.eps4,
            t_norm: p.t_norm,
            t1_norm: p.t1_norm,
            t2_norm: p.t2_norm,
        }
        .validate()
    }
}
