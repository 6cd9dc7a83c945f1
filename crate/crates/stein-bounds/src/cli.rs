//! The `bound`, `simulate` and `verify` commands.
//!
//! Exit code contract: 0 success / no violation, 2 usage or configuration
//! error, 3 numeric failure, 4 bound violation.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::Value;

use crate::bounds::{
    binomial_a, cor_bounded_tail, cor_normal_tail, er_constant, er_moment_bound, h_k,
    local_dep_moment_bound, local_dep_tail, markov_tail, moment_bound_from_tail,
    neighbourhood_norm_bound, optimized_markov_tail, prop_independent_bound, size_bias_tail,
    thm1_moment_bound, thm2_moment_bound, thm3_moment_bound, thm4_normal_comparison_bound,
    BoundValue, NormProfile, TailProfile,
};
use crate::config::{BoundRequest, RunConfig};
use crate::coupling::CouplingParams;
use crate::error::{Error, Result};
use crate::mc::{
    check_stein_identity, estimate_central_moments, estimate_tail, verify_bounds, MomentEstimate,
    VerdictStatus,
};
use crate::models::{analytic_coupling_params, ModelKind, ModelSpec};
use crate::norms::MomentOrder;
use crate::report::{BoundReport, ReportRow};

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Config(_) | Error::Json(_) => 2,
        Error::Numeric(_) | Error::Io(_) => 3,
    }
}

pub const EXIT_VIOLATION: i32 = 4;

// ---- parameter extraction -------------------------------------------------

struct Params<'a> {
    theorem: &'a str,
    map: &'a BTreeMap<String, Value>,
}

impl<'a> Params<'a> {
    fn check_known(&self, known: &[&str]) -> Result<()> {
        for key in self.map.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::config(format!(
                    "theorem {} does not take parameter `{key}` (known: {})",
                    self.theorem,
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::config(format!("parameter `{key}` must be a number"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?.ok_or_else(|| {
            Error::config(format!("theorem {} requires parameter `{key}`", self.theorem))
        })
    }

    fn u64_req(&self, key: &str) -> Result<u64> {
        let v = self.f64_req(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::config(format!("parameter `{key}` must be a non-negative integer")));
        }
        Ok(v as u64)
    }

    fn u32_req(&self, key: &str) -> Result<u32> {
        u32::try_from(self.u64_req(key)?)
            .map_err(|_| Error::config(format!("parameter `{key}` out of range")))
    }

    fn u32_or(&self, key: &str, default: u32) -> Result<u32> {
        match self.map.get(key) {
            None => Ok(default),
            Some(_) => self.u32_req(key),
        }
    }

    /// Scalar or array of numbers: the sweep grid.
    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| Error::config(format!("`{key}` array must hold numbers")))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
            Some(v) => v
                .as_f64()
                .map(|x| Some(vec![x]))
                .ok_or_else(|| Error::config(format!("`{key}` must be a number or array"))),
        }
    }

    fn u32_list_req(&self, key: &str) -> Result<Vec<u32>> {
        let list = self.f64_list(key)?.ok_or_else(|| {
            Error::config(format!("theorem {} requires parameter `{key}`", self.theorem))
        })?;
        list.into_iter()
            .map(|v| {
                if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
                    Err(Error::config(format!("`{key}` entries must be non-negative integers")))
                } else {
                    Ok(v as u32)
                }
            })
            .collect()
    }

    fn f64_list_req(&self, key: &str) -> Result<Vec<f64>> {
        self.f64_list(key)?.ok_or_else(|| {
            Error::config(format!("theorem {} requires parameter `{key}`", self.theorem))
        })
    }

    fn profile_req(&self, key: &str) -> Result<TailProfile> {
        match self.map.get(key) {
            Some(Value::String(s)) => s.parse(),
            Some(_) => Err(Error::config(format!(
                "`{key}` must be a profile string like bounded:1 or weibull:1,1,1"
            ))),
            None => Err(Error::config(format!(
                "theorem {} requires parameter `{key}`",
                self.theorem
            ))),
        }
    }
}

fn coupling_params(p: &Params<'_>) -> Result<CouplingParams> {
    CouplingParams::builder()
        .a(p.f64_or("A", 0.0)?)
        .b(p.f64_or("B", 0.0)?)
        .sigma(p.f64_or("sigma", 0.0)?)
        .eps(p.f64_or("eps", 0.0)?)
        .eps_prime(p.f64_or("eps_prime", 0.0)?)
        .eps1(p.f64_or("eps1", 0.0)?)
        .eps2(p.f64_or("eps2", 0.0)?)
        .eps3(p.f64_or("eps3", 0.0)?)
        .eps4(p.f64_or("eps4", 0.0)?)
        .t(p.f64_or("T", 0.0)?)
        .t1(p.f64_or("T1", 0.0)?)
        .t2(p.f64_or("T2", 0.0)?)
        .build()
}

fn bound_row(theorem: &str, bound: &BoundValue) -> ReportRow {
    let mut row = ReportRow::new("-", theorem);
    row.applicable = bound.is_applicable();
    row.bound = bound.value();
    if !bound.is_applicable() {
        row.verdict = "bound_inapplicable".into();
    }
    row
}

// ---- bound ---------------------------------------------------------------

/// Evaluates one bound request across its parameter grid.
fn eval_bound_request(req: &BoundRequest) -> Result<Vec<ReportRow>> {
    let p = Params {
        theorem: &req.theorem,
        map: &req.params,
    };
    let mut rows = Vec::new();
    match req.theorem.as_str() {
        "thm1" => {
            p.check_known(&["A", "B", "eps", "T", "k"])?;
            let cp = coupling_params(&p)?;
            for k in p.u32_list_req("k")? {
                let b = thm1_moment_bound(&cp, k)?;
                let mut row = bound_row("thm1", &b);
                row.theorem = b.form().to_string();
                row.order = Some(2 * k);
                rows.push(row);
            }
        }
        "thm2" => {
            p.check_known(&["G", "D", "eps", "eps_prime", "r"])?;
            let g = p.f64_req("G")?;
            let d = p.f64_req("D")?;
            for r in p.u32_list_req("r")? {
                let b = thm2_moment_bound(g, d, p.f64_or("eps", 0.0)?, p.f64_or("eps_prime", 0.0)?, r)?;
                let mut row = bound_row("thm2", &b);
                row.order = Some(r);
                rows.push(row);
            }
        }
        "thm3" => {
            p.check_known(&["A", "B", "sigma", "eps1", "eps2", "eps3", "T2", "k"])?;
            let cp = coupling_params(&p)?;
            for k in p.u32_list_req("k")? {
                let b = thm3_moment_bound(&cp, k)?;
                let mut row = bound_row("thm3", &b);
                row.order = Some(2 * k);
                rows.push(row);
            }
        }
        "thm4" => {
            p.check_known(&["A", "B", "sigma", "eps1", "eps2", "eps3", "eps4", "k"])?;
            let cp = coupling_params(&p)?;
            for k in p.u32_list_req("k")? {
                let b = thm4_normal_comparison_bound(&cp, k)?;
                let mut row = bound_row("thm4", &b);
                row.order = Some(2 * k);
                rows.push(row);
            }
        }
        "h-k" => {
            p.check_known(&["A", "B", "sigma", "k"])?;
            let cp = coupling_params(&p)?;
            for k in p.u32_list_req("k")? {
                let mut row = ReportRow::new("-", "h-k");
                row.order = Some(2 * k);
                row.bound = Some(h_k(&cp, k)?);
                rows.push(row);
            }
        }
        "markov" => {
            p.check_known(&["norm", "r", "t"])?;
            let norm = p.f64_req("norm")?;
            let order = MomentOrder::new(p.u32_req("r")?)?;
            for t in p.f64_list_req("t")? {
                let mut row = ReportRow::new("-", "markov");
                row.order = Some(order.value());
                row.t = Some(t);
                row.bound = Some(markov_tail(norm, order, t)?);
                rows.push(row);
            }
        }
        "profile-norm" => {
            p.check_known(&["profile", "two_k"])?;
            let profile = p.profile_req("profile")?;
            for two_k in p.u32_list_req("two_k")? {
                let mut row = ReportRow::new("-", "profile-norm");
                row.order = Some(two_k);
                row.bound = Some(moment_bound_from_tail(&profile, MomentOrder::new(two_k)?)?);
                rows.push(row);
            }
        }
        "optimized-markov" => {
            p.check_known(&["n", "profile_g", "profile_d", "t", "k_max"])?;
            let n = p.u64_req("n")?;
            let profile = NormProfile::new(p.profile_req("profile_g")?, p.profile_req("profile_d")?)?;
            let k_max = p.u32_or("k_max", 50)?;
            for t in p.f64_list_req("t")? {
                let opt = optimized_markov_tail(n, &profile, t, k_max)?;
                let mut row = ReportRow::new("-", "optimized-markov");
                row.t = Some(t);
                row.order = Some(2 * opt.k_star);
                row.bound = Some(opt.prob);
                rows.push(row);
            }
        }
        "cor-bounded" => {
            p.check_known(&["n", "x1", "x2", "t"])?;
            let (n, x1, x2) = (p.u64_req("n")?, p.f64_req("x1")?, p.f64_req("x2")?);
            for t in p.f64_list_req("t")? {
                let b = cor_bounded_tail(n, x1, x2, t)?;
                let mut row = bound_row("cor-bounded", &b);
                row.t = Some(t);
                rows.push(row);
            }
        }
        "cor-normal" => {
            p.check_known(&["y", "E", "h"])?;
            let e_const = p.f64_or("E", 0.0)?;
            let h_const = p.f64_or("h", 0.0)?;
            for y in p.f64_list_req("y")? {
                let b = cor_normal_tail(y, |_| e_const, |_| h_const)?;
                let mut row = bound_row("cor-normal", &b);
                row.t = Some(y);
                rows.push(row);
            }
        }
        "weak-scale" => {
            p.check_known(&["n", "profile_g", "profile_d"])?;
            let profile = NormProfile::new(p.profile_req("profile_g")?, p.profile_req("profile_d")?)?;
            for n in p.f64_list_req("n")? {
                if n < 3.0 || n.fract() != 0.0 {
                    return Err(Error::config("`n` must be integers >= 3"));
                }
                let mut row = ReportRow::new("-", "weak-scale");
                row.t = Some(n);
                row.bound = Some(crate::bounds::weak_concentration_scale(n as u64, &profile)?);
                rows.push(row);
            }
        }
        "prop-independent" => {
            p.check_known(&["rho", "n", "k"])?;
            let rho = p.f64_req("rho")?;
            let n = p.u64_req("n")?;
            for k in p.u32_list_req("k")? {
                let b = prop_independent_bound(rho, n, k)?;
                let mut row = bound_row("prop-independent", &b);
                row.order = Some(2 * k);
                rows.push(row);
            }
        }
        "local-dep-moment" => {
            p.check_known(&["n", "d", "x", "k"])?;
            let (n, d, x) = (p.u64_req("n")?, p.u64_req("d")?, p.f64_req("x")?);
            for k in p.u32_list_req("k")? {
                let b = local_dep_moment_bound(n, d, x, k)?;
                let mut row = bound_row("local-dep-moment", &b);
                row.order = Some(2 * k);
                rows.push(row);
            }
        }
        "local-dep-tail" => {
            p.check_known(&["n", "d", "x", "t"])?;
            let (n, d, x) = (p.u64_req("n")?, p.u64_req("d")?, p.f64_req("x")?);
            for t in p.f64_list_req("t")? {
                let b = local_dep_tail(n, d, x, t)?;
                let mut row = bound_row("local-dep-tail", &b);
                row.t = Some(t);
                rows.push(row);
            }
        }
        "size-bias-tail" => {
            p.check_known(&["mu", "c", "t"])?;
            let (mu, c) = (p.f64_req("mu")?, p.f64_req("c")?);
            for t in p.f64_list_req("t")? {
                let b = size_bias_tail(mu, c, t)?;
                let mut row = bound_row("size-bias-tail", &b.ours);
                row.t = Some(t);
                rows.push(row);
                let mut row = ReportRow::new("-", "arratia-baxendale");
                row.t = Some(t);
                row.bound = Some(b.arratia_baxendale);
                rows.push(row);
            }
        }
        "er-moment" => {
            p.check_known(&["n", "lambda", "c", "r", "beta", "q"])?;
            let n = p.u64_req("n")?;
            let lambda = p.f64_req("lambda")?;
            let c = p.f64_or("c", 1.0)?;
            let r = p.u32_req("r")?;
            let beta = p.f64_or("beta", 0.0)?;
            for q in p.u32_list_req("q")? {
                let b = er_moment_bound(n, lambda, c, r, beta, q)?;
                let mut row = bound_row("er-theorem", &b.theorem);
                row.order = Some(q);
                rows.push(row);
                let mut row = bound_row("er-intermediate", &b.intermediate);
                row.order = Some(q);
                rows.push(row);
            }
        }
        "er-constant" => {
            p.check_known(&["r", "beta"])?;
            let mut row = ReportRow::new("-", "er-constant");
            row.bound = Some(er_constant(p.u32_req("r")?, p.f64_or("beta", 0.0)?)?);
            rows.push(row);
        }
        "binomial-a" => {
            p.check_known(&["x", "ell"])?;
            let x = p.f64_req("x")?;
            for ell in p.u32_list_req("ell")? {
                let mut row = ReportRow::new("-", "binomial-a");
                row.order = Some(ell);
                row.bound = Some(binomial_a(x, ell)?);
                rows.push(row);
            }
        }
        "nbhd-norm" => {
            p.check_known(&["lambda", "r", "ell"])?;
            let lambda = p.f64_req("lambda")?;
            let r = p.u32_req("r")?;
            for ell in p.u32_list_req("ell")? {
                let mut row = ReportRow::new("-", "nbhd-norm");
                row.order = Some(ell);
                row.bound = Some(neighbourhood_norm_bound(lambda, r, ell)?);
                rows.push(row);
            }
        }
        other => {
            return Err(Error::config(format!(
                "unknown theorem id `{other}`; see the README for the list"
            )));
        }
    }
    Ok(rows)
}

/// `bound`: evaluates closed-form bounds across parameter grids; no
/// simulation.
pub fn cmd_bound(config: &RunConfig) -> Result<BoundReport> {
    if config.bounds.is_empty() {
        return Err(Error::config("bound: no theorem requested (use --theorem)"));
    }
    let mut report = BoundReport::new(&config.canonical_json());
    for req in &config.bounds {
        report.rows.extend(eval_bound_request(req)?);
    }
    Ok(report)
}

// ---- simulate / verify ----------------------------------------------------

fn require_model(config: &RunConfig) -> Result<&ModelSpec> {
    config
        .model
        .as_ref()
        .ok_or_else(|| Error::config("this command needs a model in the config file"))
}

fn orders_of(config: &RunConfig) -> Result<Vec<MomentOrder>> {
    config.orders.iter().map(|&r| MomentOrder::new(r)).collect()
}

fn stamp(rows: &mut [ReportRow], start: usize, timing: bool, t0: Instant) {
    if timing {
        let secs = t0.elapsed().as_secs_f64();
        for row in &mut rows[start..] {
            row.seconds = secs;
        }
    }
}

fn moment_rows(model_id: &str, estimates: &[MomentEstimate]) -> Vec<ReportRow> {
    estimates
        .iter()
        .map(|e| {
            let mut row = ReportRow::new(model_id, "empirical-moment");
            row.order = Some(e.order.value());
            row.estimate = Some(e.point);
            row.se = Some(e.std_error);
            row
        })
        .collect()
}

fn identity_rows(model_id: &str, spec: &ModelSpec, config: &RunConfig) -> Result<Vec<ReportRow>> {
    if config.identity_degree == 0 {
        return Ok(Vec::new());
    }
    let report = check_stein_identity(spec, config.identity_degree, config.samples, config.seed)?;
    Ok(report
        .rows
        .iter()
        .map(|r| {
            let mut row = ReportRow::new(model_id, "stein-identity");
            row.order = Some(r.degree);
            let diff = r.lhs - r.rhs;
            row.estimate = Some(diff);
            row.se = Some(if r.z_score != 0.0 {
                (diff / r.z_score).abs()
            } else {
                0.0
            });
            row.verdict = if r.z_score.abs() <= 4.0 {
                "holds".into()
            } else {
                "violated".into()
            };
            row
        })
        .collect())
}

/// `simulate`: estimates moments, tails and the coupling identity; no
/// bound comparison.
pub fn cmd_simulate(config: &RunConfig) -> Result<BoundReport> {
    let spec = require_model(config)?;
    let model_id = spec.id();
    let mut report = BoundReport::new(&config.canonical_json());

    if !config.orders.is_empty() {
        let t0 = Instant::now();
        let start = report.rows.len();
        let estimates = estimate_central_moments(
            spec,
            &orders_of(config)?,
            config.samples,
            config.batches,
            config.seed,
        )?;
        report.rows.extend(moment_rows(model_id, &estimates));
        stamp(&mut report.rows, start, config.timing, t0);
    }

    if !config.thresholds.is_empty() {
        let t0 = Instant::now();
        let start = report.rows.len();
        for te in estimate_tail(spec, &config.thresholds, config.samples, config.seed)? {
            let mut row = ReportRow::new(model_id, "empirical-tail");
            row.t = Some(te.t);
            row.estimate = Some(te.p_hat);
            row.se = Some(te.se);
            report.rows.push(row);
        }
        stamp(&mut report.rows, start, config.timing, t0);
    }

    let t0 = Instant::now();
    let start = report.rows.len();
    let id_rows = identity_rows(model_id, spec, config)?;
    report.rows.extend(id_rows);
    stamp(&mut report.rows, start, config.timing, t0);

    Ok(report)
}

/// The matching theorem bounds for a built-in model at moment order `2k`,
/// from its analytically known coupling parameters.
pub fn default_bounds_for(spec: &ModelSpec, order: MomentOrder) -> Result<Vec<BoundValue>> {
    let two_k = order.require_even()?.value();
    let k = two_k / 2;
    let mut bounds = Vec::new();
    match &spec.model {
        ModelKind::IndependentSum(p) => {
            let cp = analytic_coupling_params(spec, k)?.expect("independent sums have params");
            bounds.push(thm1_moment_bound(&cp, k)?);
            bounds.push(thm2_moment_bound(cp.a_norm, cp.b_norm, 0.0, 0.0, two_k)?);
            // proposition bound is on the standardized norm; rescale by sigma
            let prop = prop_independent_bound(p.summand.rho(k)?, p.n, k)?;
            bounds.push(match prop.value() {
                Some(v) => BoundValue::applicable("prop-independent", v * cp.sigma),
                None => prop,
            });
        }
        ModelKind::LocalDependenceRuns(p) => {
            let x = p.window_norm(two_k);
            bounds.push(local_dep_moment_bound(p.n, u64::from(2 * p.m - 1), x, k)?);
        }
        ModelKind::SizeBiasRuns(_) => {
            let cp = analytic_coupling_params(spec, k)?.expect("size-bias runs have params");
            bounds.push(thm1_moment_bound(&cp, k)?);
        }
        ModelKind::ErNeighbourhood(p) => {
            let (c, beta) = p.statistic.growth();
            let b = er_moment_bound(p.n, p.lambda, c, p.r, beta, two_k)?;
            bounds.push(b.theorem);
            bounds.push(b.intermediate);
        }
    }
    Ok(bounds)
}

/// `verify`: pairs the model's matching theorem bounds (and any explicit
/// bound requests) with fresh estimates and issues verdicts. The caller maps
/// a violated report to exit code 4.
pub fn cmd_verify(config: &RunConfig) -> Result<BoundReport> {
    let spec = require_model(config)?;
    let model_id = spec.id();
    let mut report = BoundReport::new(&config.canonical_json());

    if !config.orders.is_empty() {
        let t0 = Instant::now();
        let start = report.rows.len();
        let orders = orders_of(config)?;
        let estimates = estimate_central_moments(
            spec,
            &orders,
            config.samples,
            config.batches,
            config.seed,
        )?;
        let mut pairs = Vec::new();
        for &order in &orders {
            for bound in default_bounds_for(spec, order)? {
                pairs.push((order, bound));
            }
        }
        for verdict in verify_bounds(&pairs, &estimates)? {
            let mut row = ReportRow::new(model_id, verdict.bound.form());
            row.order = Some(verdict.estimate.order.value());
            row.applicable = verdict.bound.is_applicable();
            row.bound = verdict.bound.value();
            row.estimate = Some(verdict.estimate.point);
            row.se = Some(verdict.estimate.std_error);
            row.verdict = verdict.status.to_string();
            report.rows.push(row);
        }
        stamp(&mut report.rows, start, config.timing, t0);
    }

    // explicit tail-bound requests paired with empirical tails
    let tail_requests: Vec<&BoundRequest> = config
        .bounds
        .iter()
        .filter(|r| {
            matches!(
                r.theorem.as_str(),
                "cor-bounded" | "local-dep-tail" | "size-bias-tail"
            )
        })
        .collect();
    if !tail_requests.is_empty() {
        let t0 = Instant::now();
        let start = report.rows.len();
        let mut bound_rows = Vec::new();
        for req in &tail_requests {
            bound_rows.extend(eval_bound_request(req)?);
        }
        let thresholds: Vec<f64> = bound_rows.iter().filter_map(|r| r.t).collect();
        let tails = estimate_tail(spec, &thresholds, config.samples, config.seed)?;
        for (mut row, tail) in bound_rows.into_iter().zip(tails) {
            row.model = model_id.to_string();
            row.estimate = Some(tail.p_hat);
            row.se = Some(tail.se);
            row.verdict = match row.bound {
                None => VerdictStatus::BoundInapplicable,
                Some(b) => {
                    if tail.p_hat - 3.0 * tail.se > b {
                        VerdictStatus::Violated
                    } else if tail.p_hat + 3.0 * tail.se <= b {
                        VerdictStatus::Holds
                    } else {
                        VerdictStatus::Inconclusive
                    }
                }
            }
            .to_string();
            report.rows.push(row);
        }
        stamp(&mut report.rows, start, config.timing, t0);
    }

    let t0 = Instant::now();
    let start = report.rows.len();
    let id_rows = identity_rows(model_id, spec, config)?;
    report.rows.extend(id_rows);
    stamp(&mut report.rows, start, config.timing, t0);

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{IndependentSumParams, RunsParams, Summand};

    fn bound_config(theorem: &str, params: serde_json::Value) -> RunConfig {
        let mut config = RunConfig::default();
        config.bounds.push(BoundRequest {
            theorem: theorem.into(),
            params: serde_json::from_value(params).unwrap(),
        });
        config
    }

    #[test]
    fn bound_thm1_example() {
        let config = bound_config("thm1", serde_json::json!({"A": 3, "B": 1, "k": 2}));
        let report = cmd_bound(&config).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!((report.rows[0].bound.unwrap() - 37.0 / 9.0).abs() < 1e-9);
        assert_eq!(report.rows[0].theorem, "thm1-form1");
    }

    #[test]
    fn bound_cor_normal_defaults() {
        let config = bound_config("cor-normal", serde_json::json!({"y": 2}));
        let report = cmd_bound(&config).unwrap();
        assert!((report.rows[0].bound.unwrap() - 0.31555369865639016).abs() < 1e-9);
    }

    #[test]
    fn bound_thm2_r1_is_usage_error() {
        let config = bound_config("thm2", serde_json::json!({"G": 1, "D": 1, "r": 1}));
        let err = cmd_bound(&config).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(err.to_string().contains("r must be >= 2"));
    }

    #[test]
    fn bound_unknown_theorem_is_usage_error() {
        let config = bound_config("thm9", serde_json::json!({}));
        let err = cmd_bound(&config).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn bound_unknown_parameter_is_usage_error() {
        let config = bound_config("thm1", serde_json::json!({"A": 3, "B": 1, "k": 2, "zz": 0}));
        assert!(cmd_bound(&config).is_err());
    }

    #[test]
    fn bound_grid_sweeps() {
        let config = bound_config("thm1", serde_json::json!({"A": 3, "B": 1, "k": [1, 2, 3]}));
        let report = cmd_bound(&config).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.rows[2].order, Some(6));
    }

    #[test]
    fn simulate_and_verify_small_model() {
        let mut config = RunConfig::default();
        config.model = Some(ModelSpec::new(
            ModelKind::IndependentSum(IndependentSumParams {
                n: 3,
                summand: Summand::Rademacher,
            }),
            1,
        ));
        config.orders = vec![2, 4];
        config.samples = 30_000;
        config.batches = 30;
        let report = cmd_simulate(&config).unwrap();
        // moment rows + identity rows
        assert_eq!(report.rows.len(), 2 + 3);
        assert!(report.rows.iter().all(|r| r.seconds == 0.0));

        let report = cmd_verify(&config).unwrap();
        assert!(!report.any_violated(), "{report:?}");
        // thm1 + thm2 + prop per order, plus 3 identity rows
        assert_eq!(report.rows.len(), 2 * 3 + 3);
    }

    #[test]
    fn verify_corrupted_coupling_is_violated() {
        let mut config = RunConfig::default();
        let mut spec = ModelSpec::new(
            ModelKind::SizeBiasRuns(RunsParams::new(50, 2, 0.5).unwrap()),
            3,
        );
        spec.g_scale = 1.5;
        config.model = Some(spec);
        config.samples = 200_000;
        config.identity_degree = 1;
        let report = cmd_verify(&config).unwrap();
        assert!(report.any_violated());
    }
}
