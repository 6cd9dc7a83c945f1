//! Closed-form moment and tail bounds, evaluated as deterministic numeric
//! functions of coupling parameters.
//!
//! Hypothesis failures (an `ε` too large, a threshold not met) are reported
//! as inapplicable [`BoundValue`]s rather than errors, so sweeps can map out
//! applicability regions. Domain violations (`k = 0`, negative norms) are
//! [`crate::error::Error::Domain`].

mod moments;
mod profiles;
mod tails;

pub use moments::{
    binomial_a, er_constant, er_moment_bound, h_k, local_dep_moment_bound, markov_tail,
    neighbourhood_norm_bound, prop_independent_bound, thm1_moment_bound, thm2_moment_bound,
    thm3_moment_bound, thm4_normal_comparison_bound, ErMomentBound,
};
pub use profiles::{moment_bound_from_tail, NormProfile, TailProfile};
pub use tails::{
    cor_bounded_tail, cor_normal_tail, local_dep_tail, optimized_markov_tail, size_bias_tail,
    weak_concentration_scale, OptimizedTail, SizeBiasTail,
};

use serde::{Deserialize, Serialize};

/// The outcome of evaluating one closed-form bound.
///
/// Either a finite non-negative value together with a label for the formula
/// variant that produced it, or an inapplicability record with the reason the
/// hypotheses failed. A vacuous bound clamped to 1 is still *applicable*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    form: String,
    value: Option<f64>,
    reason: Option<String>,
}

impl BoundValue {
    pub fn applicable(form: impl Into<String>, value: f64) -> Self {
        let form = form.into();
        if !value.is_finite() || value < 0.0 {
            // keep the invariant: applicable implies finite and >= 0
            return BoundValue {
                form,
                value: None,
                reason: Some(format!("value {value} is not finite and non-negative")),
            };
        }
        BoundValue {
            form,
            value: Some(value),
            reason: None,
        }
    }

    pub fn inapplicable(form: impl Into<String>, reason: impl Into<String>) -> Self {
        BoundValue {
            form: form.into(),
            value: None,
            reason: Some(reason.into()),
        }
    }

    pub fn is_applicable(&self) -> bool {
        self.value.is_some()
    }

    /// The bound, when applicable.
    pub fn value(&self) -> Option<f64> {
        self.value
    }

    /// Which formula variant produced the value.
    pub fn form(&self) -> &str {
        &self.form
    }

    pub fn reason(&self) -> Option<&str> {
        self.reason.as_deref()
    }
}

impl std::fmt::Display for BoundValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.value {
            Some(v) => write!(f, "{} = {v:.9e}", self.form),
            None => write!(
                f,
                "{} inapplicable ({})",
                self.form,
                self.reason.as_deref().unwrap_or("no reason recorded")
            ),
        }
    }
}
