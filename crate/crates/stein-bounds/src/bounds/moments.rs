//! Central moment bounds: the four coupling theorems, the independent-sum
//! refinement, local dependence, and the Erdős–Rényi neighbourhood-statistic
//! constants.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use super::BoundValue;
use crate::coupling::CouplingParams;
use crate::error::{Error, Result};
use crate::norms::{normal_norm_2k, MomentOrder};

fn check_k(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("moment index k must be >= 1"));
    }
    Ok(f64::from(k))
}

/// First form of the basic theorem: `A/(1−ε) [(1+√(B(1−ε)/(A(2k−1))))^{2k−1} − 1]`
/// plus the remainder term. Shared with the local-dependence specialisation.
fn basic_form1(a: f64, b: f64, eps: f64, t_norm: f64, k: u32) -> f64 {
    let tail = t_norm / (1.0 - eps);
    if b == 0.0 {
        return tail;
    }
    let tk = 2.0 * f64::from(k) - 1.0;
    let root = (b * (1.0 - eps) / (a * tk)).sqrt();
    a / (1.0 - eps) * ((1.0 + root).powi(2 * k as i32 - 1) - 1.0) + tail
}

/// Bound on `‖W−μ‖₂ₖ` for an approximate Stein coupling with
/// `‖G‖₂ₖ ≤ A`, `‖D‖₂ₖ ≤ B` and remainder controlled by `ε` and `T`.
///
/// Returns the smaller of the two displayed forms; `form` records which.
pub fn thm1_moment_bound(params: &CouplingParams, k: u32) -> Result<BoundValue> {
    let kf = check_k(k)?;
    let (a, b, eps, t) = (params.a_norm, params.b_norm, params.eps, params.t_norm);
    if eps >= 1.0 {
        return Ok(BoundValue::inapplicable("thm1", format!("eps = {eps} >= 1")));
    }
    if a == 0.0 && b > 0.0 {
        return Ok(BoundValue::inapplicable(
            "thm1",
            "A = 0 with B > 0: the bracket is undefined",
        ));
    }
    let tail = t / (1.0 - eps);
    if b == 0.0 {
        return Ok(BoundValue::applicable("thm1-form1", tail));
    }
    let tk = 2.0 * kf - 1.0;
    let form1 = basic_form1(a, b, eps, t, k);
    let form2 = (tk * a * b / (1.0 - eps)).sqrt() * (b * (1.0 - eps) * tk / a).sqrt().exp() + tail;
    if form1 <= form2 {
        Ok(BoundValue::applicable("thm1-form1", form1))
    } else {
        Ok(BoundValue::applicable("thm1-form2", form2))
    }
}

/// Bound `√(2(r−1)‖G‖_r‖D‖_r/(1−ε−ε′))` on `‖W−μ‖_r`, valid when the caller
/// has verified `E|W′−μ|^r ≤ E|W−μ|^r` out of band.
pub fn thm2_moment_bound(
    norm_g_r: f64,
    norm_d_r: f64,
    eps: f64,
    eps_prime: f64,
    r: u32,
) -> Result<BoundValue> {
    if r < 2 {
        return Err(Error::domain(
            "r must be >= 2: at r = 1 the bound degenerates and the proof needs r-1 >= 1",
        ));
    }
    for (name, v) in [
        ("norm_g_r", norm_g_r),
        ("norm_d_r", norm_d_r),
        ("eps", eps),
        ("eps_prime", eps_prime),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if eps + eps_prime >= 1.0 {
        return Ok(BoundValue::inapplicable(
            "thm2",
            format!("eps + eps_prime = {} >= 1", eps + eps_prime),
        ));
    }
    let value = (2.0 * (f64::from(r) - 1.0) * norm_g_r * norm_d_r / (1.0 - eps - eps_prime)).sqrt();
    Ok(BoundValue::applicable("thm2", value))
}

/// Sharper bound with `AB` replaced by `σ²` in the leading term, available
/// when the conditional-variance remainder `|E[GD|W] − σ²|` is controlled.
pub fn thm3_moment_bound(params: &CouplingParams, k: u32) -> Result<BoundValue> {
    let kf = check_k(k)?;
    let sigma = params.sigma;
    if sigma == 0.0 {
        return Ok(BoundValue::inapplicable("thm3", "sigma = 0"));
    }
    let tk = 2.0 * kf - 1.0;
    let denom = 1.0 - params.eps1 - params.eps2 - tk * params.eps3;
    if denom <= 0.0 {
        return Ok(BoundValue::inapplicable(
            "thm3",
            format!("eps1 + eps2 + (2k-1) eps3 = {} >= 1", 1.0 - denom),
        ));
    }
    let correction = (kf - 1.0) * params.a_norm * params.b_norm.powi(2)
        / (sigma.powi(3) * tk.sqrt())
        * (params.b_norm * tk.sqrt() / sigma).exp();
    let bracket = 1.0 + correction + params.t2_norm / sigma.powi(2);
    let value = sigma * tk.sqrt() / denom.sqrt() * bracket.sqrt();
    Ok(BoundValue::applicable("thm3", value))
}

/// `h_k = 2^{−1/2} e^{5/2} σ^{−3} A B² √(k−1)`, the correction measuring how
/// far the even central moments can exceed the normal ones.
pub fn h_k(params: &CouplingParams, k: u32) -> Result<f64> {
    let kf = check_k(k)?;
    if params.sigma == 0.0 {
        return Err(Error::domain("h_k needs sigma > 0"));
    }
    Ok(E.powf(2.5) / 2f64.sqrt() * params.a_norm * params.b_norm.powi(2) / params.sigma.powi(3)
        * (kf - 1.0).sqrt())
}

/// Normal-comparison bound `‖σ⁻¹(W−μ)‖₂ₖ ≤ ‖N‖₂ₖ/√(1−E−h_k)` where
/// `E = ε₁+ε₂+(2k−1)(ε₃+ε₄)`, under `E < 1−h_k` and `σ ≥ B√(e(2k−1))`.
pub fn thm4_normal_comparison_bound(params: &CouplingParams, k: u32) -> Result<BoundValue> {
    let kf = check_k(k)?;
    if params.sigma == 0.0 {
        return Ok(BoundValue::inapplicable("thm4", "sigma = 0"));
    }
    let tk = 2.0 * kf - 1.0;
    if params.sigma < params.b_norm * (E * tk).sqrt() {
        return Ok(BoundValue::inapplicable(
            "thm4",
            format!(
                "sigma = {} < B sqrt(e(2k-1)) = {}",
                params.sigma,
                params.b_norm * (E * tk).sqrt()
            ),
        ));
    }
    let e_total = params.eps1 + params.eps2 + tk * (params.eps3 + params.eps4);
    let h = h_k(params, k)?;
    if e_total + h >= 1.0 {
        return Ok(BoundValue::inapplicable(
            "thm4",
            format!("E + h_k = {} >= 1", e_total + h),
        ));
    }
    let value = normal_norm_2k(k) / (1.0 - e_total - h).sqrt();
    Ok(BoundValue::applicable("thm4", value))
}

/// Markov / Chebyshev-type tail from a central norm:
/// `P[|W−μ| > t] ≤ min(1, (‖W−μ‖_r/t)^r)`.
pub fn markov_tail(central_norm: f64, order: MomentOrder, t: f64) -> Result<f64> {
    if !central_norm.is_finite() || central_norm < 0.0 {
        return Err(Error::domain(format!(
            "central_norm must be finite and >= 0, got {central_norm}"
        )));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("threshold t must be > 0, got {t}")));
    }
    Ok((central_norm / t).powi(order.value() as i32).min(1.0))
}

/// Independent-sum refinement: `‖σ⁻¹W‖₂ₖ ≤ ‖N‖₂ₖ/√(1−h′_k)` with
/// `h′_k = 5√(2e³) ρ_k³ √((k−1)/n)`.
pub fn prop_independent_bound(rho_k: f64, n: u64, k: u32) -> Result<BoundValue> {
    let kf = check_k(k)?;
    if !rho_k.is_finite() || rho_k < 1.0 {
        return Err(Error::domain(format!(
            "rho_k is a ratio of norms and must be >= 1, got {rho_k}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let h_prime = 5.0 * (2.0 * E.powi(3)).sqrt() * rho_k.powi(3) * ((kf - 1.0) / n as f64).sqrt();
    if h_prime >= 1.0 {
        return Ok(BoundValue::inapplicable(
            "prop-independent",
            format!("h'_k = {h_prime} >= 1; n too small for this k"),
        ));
    }
    Ok(BoundValue::applicable(
        "prop-independent",
        normal_norm_2k(k) / (1.0 - h_prime).sqrt(),
    ))
}

/// Local-dependence moment bound `n x [(1+√(d/(n(2k−1))))^{2k−1} − 1]` for a
/// sum with neighbourhood size `d` and `max_i ‖X_i‖₂ₖ ≤ x`.
pub fn local_dep_moment_bound(n: u64, d: u64, x: f64, k: u32) -> Result<BoundValue> {
    check_k(k)?;
    if n == 0 || d == 0 {
        return Err(Error::domain("n and d must be >= 1"));
    }
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!("x must be > 0, got {x}")));
    }
    let value = basic_form1(n as f64 * x, d as f64 * x, 0.0, 0.0, k);
    Ok(BoundValue::applicable("local-dep-moment", value))
}

/// `C_A = π e^{e−2}/log(e−1)`, the constant of the binomial moment lemma.
pub fn c_a() -> f64 {
    PI * (E - 2.0).exp() / (E - 1.0).ln()
}

/// Explicit constant `C(r,β) = C_A^{(1+2β)r} √(2^{2+β}(10^{1+β}+2^{1+β}))` of
/// the neighbourhood-statistic moment theorem.
pub fn er_constant(r: u32, beta: f64) -> Result<f64> {
    if r == 0 {
        return Err(Error::domain("neighbourhood radius r must be >= 1"));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::domain(format!("beta must be >= 0, got {beta}")));
    }
    let rf = f64::from(r);
    Ok(c_a().powf((1.0 + 2.0 * beta) * rf)
        * (2f64.powf(2.0 + beta) * (10f64.powf(1.0 + beta) + 2f64.powf(1.0 + beta))).sqrt())
}

/// The two moment bounds for a neighbourhood statistic on `ER(n, λ/n)`:
/// the closed theorem form and the sharper intermediate obtained by feeding
/// the explicit `‖G‖_q`, `‖D‖_q` bounds straight into the `√(2(q−1)‖G‖‖D‖)`
/// inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErMomentBound {
    pub theorem: BoundValue,
    pub intermediate: BoundValue,
}

/// Bound on `‖W−EW‖_q` for `W = Σ_i U(N_r(i, G_n))` with `|U(G)| ≤ c|V(G)|^β`.
pub fn er_moment_bound(
    n: u64,
    lambda: f64,
    c: f64,
    r: u32,
    beta: f64,
    q: u32,
) -> Result<ErMomentBound> {
    if q < 2 {
        return Err(Error::domain("q must be >= 2 for the moment theorem"));
    }
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    if !(lambda > 0.0) || !(c > 0.0) {
        return Err(Error::domain("lambda and c must be > 0"));
    }
    let qf = f64::from(q);
    let rf = f64::from(r);
    let m = lambda.max(qf * (1.0 + beta));
    let nf = n as f64;
    let theorem =
        nf.sqrt() * c * er_constant(r, beta)? * m.powf((1.0 + 2.0 * beta) * rf + 0.5);

    // ‖G‖_q ≤ 2^{1+β} n c (C_A max{λ, qβ})^{rβ}
    let g_bound = 2f64.powf(1.0 + beta) * nf * c * (c_a() * lambda.max(qf * beta)).powf(rf * beta);
    // ‖D‖_q ≤ (10^{1+β}+2^{1+β}) c (C_A max{λ, q(1+β)})^{(2+3β)r}
    let d_bound = (10f64.powf(1.0 + beta) + 2f64.powf(1.0 + beta))
        * c
        * (c_a() * m).powf((2.0 + 3.0 * beta) * rf);
    let intermediate = (2.0 * (qf - 1.0) * g_bound * d_bound).sqrt();

    Ok(ErMomentBound {
        theorem: BoundValue::applicable("er-theorem", theorem),
        intermediate: BoundValue::applicable("er-intermediate", intermediate),
    })
}

/// The binomial-norm constant `A(x, ℓ)`: `‖Bi(n,p)‖_ℓ ≤ A(np, ℓ)`.
pub fn binomial_a(x: f64, ell: u32) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("x must be >= 0, got {x}")));
    }
    if ell == 0 {
        return Err(Error::domain("ell must be >= 1"));
    }
    let base = PI * (E - 2.0).exp();
    if f64::from(ell) > x {
        Ok(base * f64::from(ell) / (E - 1.0).ln())
    } else {
        Ok(base * x)
    }
}

/// `‖N_r‖_ℓ ≤ (A^{r+1}−1)/(A−1)` with `A = A(λ, ℓ)`: the number of vertices
/// in an `r`-neighbourhood of a sparse Erdős–Rényi graph.
pub fn neighbourhood_norm_bound(lambda: f64, r: u32, ell: u32) -> Result<f64> {
    let a = binomial_a(lambda, ell)?;
    // A > 2 always, so the geometric ratio is safe
    Ok((a.powi(r as i32 + 1) - 1.0) / (a - 1.0))
}
