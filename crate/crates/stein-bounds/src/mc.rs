//! Parallel Monte Carlo estimation of central moments, tails, and the Stein
//! identity, plus verdicts comparing deterministic bounds with noisy
//! estimates.
//!
//! Work is split across batches; batch `b` owns replicates
//! `[b·per, (b+1)·per)` and every replicate `i` draws from the stream
//! `(seed, i)`, so results are bitwise identical for any worker count.
//! Accumulators are merged in batch-index order.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundValue;
use crate::error::{Error, Result};
use crate::models::{build_sampler, CouplingSampler, MeanEstimate, ModelSpec};
use crate::norms::MomentOrder;
use crate::streams::{combine_seeds, replicate_rng};

/// Orders above this are refused: their batch variances explode for heavy
/// tails and the standard errors stop meaning anything.
pub const MAX_ORDER: u32 = 12;

/// Minimum batch count for any estimate that feeds a verdict.
pub const MIN_BATCHES: u64 = 30;

/// An empirical central `r`-norm with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: MomentOrder,
    pub point: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_batches: u64,
}

/// Paired two-sided estimates of the coupling identity
/// `E[G(f(W′)−f(W))] = E[(W−μ)f(W)]` for `f_j(w) = (w−μ̂)^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub degree: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub rows: Vec<IdentityRow>,
    pub n_samples: u64,
}

/// Empirical tail point `P[|W−μ| > t]` with binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: f64,
    pub p_hat: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    /// `estimate + 3 SE <= bound`.
    Holds,
    /// `estimate - 3 SE > bound`.
    Violated,
    /// The bound lies inside the 3-SE band.
    Inconclusive,
    BoundInapplicable,
}

impl std::fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VerdictStatus::Holds => "holds",
            VerdictStatus::Violated => "violated",
            VerdictStatus::Inconclusive => "inconclusive",
            VerdictStatus::BoundInapplicable => "bound_inapplicable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub bound: BoundValue,
    pub estimate: MomentEstimate,
    pub status: VerdictStatus,
}

/// Streaming Neumaier-compensated sum, mergeable across batches.
#[derive(Debug, Clone, Copy, Default)]
struct CompSum {
    sum: f64,
    comp: f64,
}

impl CompSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Runs `per_batch(b)` for every batch index, in parallel, and returns the
/// results in batch order. Honors the `STEIN_THREADS` cap; the output does
/// not depend on the worker count.
fn run_batches<A, F>(n_batches: u64, per_batch: F) -> Vec<A>
where
    A: Send,
    F: Fn(u64) -> A + Sync,
{
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    let pool = POOL.get_or_init(|| {
        std::env::var("STEIN_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&t| t >= 1)
            .map(|threads| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .expect("thread pool construction")
            })
    });
    let work = || (0..n_batches).into_par_iter().map(&per_batch).collect();
    match pool {
        Some(p) => p.install(work),
        None => work(),
    }
}

fn batch_layout(n_samples: u64, n_batches: u64) -> Result<u64> {
    if n_batches < MIN_BATCHES {
        return Err(Error::config(format!(
            "n_batches = {n_batches} is below the minimum {MIN_BATCHES} required for verdicts"
        )));
    }
    if n_samples == 0 || n_samples % n_batches != 0 {
        return Err(Error::config(format!(
            "n_samples = {n_samples} must be a positive multiple of n_batches = {n_batches}"
        )));
    }
    Ok(n_samples / n_batches)
}

/// The mean of `W`: exact when the model provides it, otherwise estimated in
/// a first pass over the same replicate streams.
fn resolve_mean(
    sampler: &dyn CouplingSampler,
    base_seed: u64,
    n_samples: u64,
    n_batches: u64,
) -> (f64, f64) {
    match sampler.mean() {
        MeanEstimate::Exact(mu) => (mu, 0.0),
        MeanEstimate::Estimated { .. } => {
            let per = n_samples / n_batches;
            let batch_means: Vec<f64> = run_batches(n_batches, |b| {
                let mut acc = CompSum::default();
                for i in b * per..(b + 1) * per {
                    let mut rng = replicate_rng(base_seed, i);
                    acc.add(sampler.sample(&mut rng).w);
                }
                acc.value() / per as f64
            });
            let mut total = CompSum::default();
            for &m in &batch_means {
                total.add(m);
            }
            let mean = total.value() / n_batches as f64;
            let var = batch_means
                .iter()
                .map(|m| (m - mean).powi(2))
                .sum::<f64>()
                / (n_batches as f64 - 1.0);
            (mean, (var / n_batches as f64).sqrt())
        }
    }
}

/// Two-pass batch-means estimates of `‖W−μ‖_r` for each requested order.
///
/// Exact `μ` is used whenever the model provides it; otherwise the plug-in
/// mean from the first pass is used and its standard error is folded into
/// the delta-method error of each norm.
pub fn estimate_central_moments(
    spec: &ModelSpec,
    orders: &[MomentOrder],
    n_samples: u64,
    n_batches: u64,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    let per = batch_layout(n_samples, n_batches)?;
    for o in orders {
        if o.value() > MAX_ORDER {
            return Err(Error::config(format!(
                "order {} exceeds the supported cap {MAX_ORDER}; higher moments of the \
                 simulated models have standard errors too large to report honestly",
                o.value()
            )));
        }
    }
    let sampler = build_sampler(spec)?;
    let base_seed = combine_seeds(spec.seed, seed);
    let (mu, mu_se) = resolve_mean(sampler.as_ref(), base_seed, n_samples, n_batches);

    struct Batch {
        moment: Vec<f64>,
        deriv: Vec<f64>,
    }
    let batches: Vec<Batch> = run_batches(n_batches, |b| {
        let mut moment = vec![CompSum::default(); orders.len()];
        let mut deriv = vec![CompSum::default(); orders.len()];
        for i in b * per..(b + 1) * per {
            let mut rng = replicate_rng(base_seed, i);
            let w = sampler.sample(&mut rng).w;
            let centred = w - mu;
            let a = centred.abs();
            for (j, o) in orders.iter().enumerate() {
                let r = i32::try_from(o.value()).expect("order fits i32");
                moment[j].add(a.powi(r));
                if mu_se > 0.0 {
                    deriv[j].add(-f64::from(o.value()) * centred.signum() * a.powi(r - 1));
                }
            }
        }
        Batch {
            moment: moment.iter().map(|c| c.value() / per as f64).collect(),
            deriv: deriv.iter().map(|c| c.value() / per as f64).collect(),
        }
    });

    let mut out = Vec::with_capacity(orders.len());
    for (j, &order) in orders.iter().enumerate() {
        let mut total = CompSum::default();
        for b in &batches {
            total.add(b.moment[j]);
        }
        let grand = total.value() / n_batches as f64;
        let var_batch = batches
            .iter()
            .map(|b| (b.moment[j] - grand).powi(2))
            .sum::<f64>()
            / (n_batches as f64 - 1.0);
        let mut se_m_sq = var_batch / n_batches as f64;
        if mu_se > 0.0 {
            let g_hat =
                batches.iter().map(|b| b.deriv[j]).sum::<f64>() / n_batches as f64;
            se_m_sq += (g_hat * mu_se).powi(2);
        }
        let r = f64::from(order.value());
        let (point, std_error) = if grand <= 0.0 {
            (0.0, 0.0)
        } else {
            let point = grand.powf(1.0 / r);
            (point, se_m_sq.sqrt() / r * grand.powf(1.0 / r - 1.0))
        };
        out.push(MomentEstimate {
            order,
            point,
            std_error,
            n_samples,
            n_batches,
        });
    }
    Ok(out)
}

/// Paired z-tests of the coupling identity for `f_j(w) = (w−μ̂)^j`,
/// `j = 1..=max_f_degree`, with `R ≡ 0`.
pub fn check_stein_identity(
    spec: &ModelSpec,
    max_f_degree: u32,
    n_samples: u64,
    seed: u64,
) -> Result<IdentityReport> {
    if max_f_degree == 0 || max_f_degree > 6 {
        return Err(Error::config(
            "max_f_degree must be in 1..=6; higher powers have exploding variance",
        ));
    }
    if n_samples == 0 {
        return Err(Error::config("n_samples must be positive"));
    }
    let sampler = build_sampler(spec)?;
    let base_seed = combine_seeds(spec.seed, seed);
    let mu = sampler.mean().value();
    let mu_se = sampler.mean().se();
    let g_scale = spec.g_scale;

    // chunked only for parallelism; merge order is fixed
    let n_chunks = 256u64.min(n_samples);
    let per = n_samples / n_chunks;
    let remainder = n_samples % n_chunks;
    let degrees: Vec<u32> = (1..=max_f_degree).collect();

    struct Chunk {
        sum_lhs: Vec<f64>,
        sum_rhs: Vec<f64>,
        sum_diff: Vec<f64>,
        sum_diff_sq: Vec<f64>,
        sum_ddmu: Vec<f64>,
    }
    let chunks: Vec<Chunk> = run_batches(n_chunks, |b| {
        let lo = b * per + b.min(remainder);
        let hi = lo + per + u64::from(b < remainder);
        let m = degrees.len();
        let mut c = Chunk {
            sum_lhs: vec![0.0; m],
            sum_rhs: vec![0.0; m],
            sum_diff: vec![0.0; m],
            sum_diff_sq: vec![0.0; m],
            sum_ddmu: vec![0.0; m],
        };
        for i in lo..hi {
            let mut rng = replicate_rng(base_seed, i);
            let s = sampler.sample(&mut rng);
            let g = s.g * g_scale;
            let (cw, cwp) = (s.w - mu, s.w_prime - mu);
            for (jix, &j) in degrees.iter().enumerate() {
                let j_i = j as i32;
                let f_w = cw.powi(j_i);
                let f_wp = cwp.powi(j_i);
                let lhs = g * (f_wp - f_w);
                let rhs = cw * f_w;
                let d = lhs - rhs;
                c.sum_lhs[jix] += lhs;
                c.sum_rhs[jix] += rhs;
                c.sum_diff[jix] += d;
                c.sum_diff_sq[jix] += d * d;
                if mu_se > 0.0 {
                    // d(lhs-rhs)/dmu for error folding of the plug-in mean
                    let jf = f64::from(j);
                    let dd = -jf * g * (cwp.powi(j_i - 1) - cw.powi(j_i - 1))
                        + (jf + 1.0) * cw.powi(j_i);
                    c.sum_ddmu[jix] += dd;
                }
            }
        }
        c
    });

    let nf = n_samples as f64;
    let mut rows = Vec::new();
    for (jix, &degree) in degrees.iter().enumerate() {
        let lhs = chunks.iter().map(|c| c.sum_lhs[jix]).sum::<f64>() / nf;
        let rhs = chunks.iter().map(|c| c.sum_rhs[jix]).sum::<f64>() / nf;
        let mean_d = chunks.iter().map(|c| c.sum_diff[jix]).sum::<f64>() / nf;
        let mean_d_sq = chunks.iter().map(|c| c.sum_diff_sq[jix]).sum::<f64>() / nf;
        let var_d = (mean_d_sq - mean_d * mean_d).max(0.0);
        let mut se_sq = var_d / nf;
        if mu_se > 0.0 {
            let ddmu = chunks.iter().map(|c| c.sum_ddmu[jix]).sum::<f64>() / nf;
            se_sq += (ddmu * mu_se).powi(2);
        }
        let se = se_sq.sqrt();
        let z_score = if se == 0.0 { 0.0 } else { mean_d / se };
        rows.push(IdentityRow {
            degree,
            lhs,
            rhs,
            z_score,
        });
    }
    Ok(IdentityReport {
        rows,
        n_samples,
    })
}

/// Indicator means of `|W−μ| > t` with binomial standard errors.
pub fn estimate_tail(
    spec: &ModelSpec,
    thresholds: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    if n_samples < 10_000 {
        return Err(Error::config(
            "tail estimation needs n_samples >= 10_000 for usable binomial errors",
        ));
    }
    for &t in thresholds {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("tail threshold must be >= 0, got {t}")));
        }
    }
    let sampler = build_sampler(spec)?;
    let base_seed = combine_seeds(spec.seed, seed);
    let mu = sampler.mean().value();

    let n_chunks = 256u64.min(n_samples);
    let per = n_samples / n_chunks;
    let remainder = n_samples % n_chunks;
    let counts: Vec<Vec<u64>> = run_batches(n_chunks, |b| {
        let lo = b * per + b.min(remainder);
        let hi = lo + per + u64::from(b < remainder);
        let mut counts = vec![0u64; thresholds.len()];
        for i in lo..hi {
            let mut rng = replicate_rng(base_seed, i);
            let dev = (sampler.sample(&mut rng).w - mu).abs();
            for (ti, &t) in thresholds.iter().enumerate() {
                if dev > t {
                    counts[ti] += 1;
                }
            }
        }
        counts
    });

    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let hits: u64 = counts.iter().map(|c| c[ti]).sum();
            let p_hat = hits as f64 / n_samples as f64;
            TailEstimate {
                t,
                p_hat,
                se: (p_hat * (1.0 - p_hat) / n_samples as f64).sqrt(),
            }
        })
        .collect())
}

/// Pairs bounds with estimates of matching order and issues verdicts.
///
/// A bound is `violated` only when the estimate exceeds it by more than
/// 3 standard errors; `holds` needs the whole 3-SE band below the bound.
pub fn verify_bounds(
    bounds: &[(MomentOrder, BoundValue)],
    estimates: &[MomentEstimate],
) -> Result<Vec<Verdict>> {
    let mut verdicts = Vec::with_capacity(bounds.len());
    for (order, bound) in bounds {
        let estimate = estimates
            .iter()
            .find(|e| e.order == *order)
            .copied()
            .ok_or_else(|| {
                Error::config(format!("no estimate of order {order} for bound {}", bound.form()))
            })?;
        if estimate.n_batches < MIN_BATCHES {
            return Err(Error::config(format!(
                "estimate of order {order} used {} batches; verdicts need at least {MIN_BATCHES}",
                estimate.n_batches
            )));
        }
        let status = match bound.value() {
            None => VerdictStatus::BoundInapplicable,
            Some(v) => {
                if estimate.point - 3.0 * estimate.std_error > v {
                    VerdictStatus::Violated
                } else if estimate.point + 3.0 * estimate.std_error <= v {
                    VerdictStatus::Holds
                } else {
                    VerdictStatus::Inconclusive
                }
            }
        };
        verdicts.push(Verdict {
            bound: bound.clone(),
            estimate,
            status,
        });
    }
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{IndependentSumParams, ModelKind, Summand};
    use approx::assert_relative_eq;

    fn rademacher(n: u64, seed: u64) -> ModelSpec {
        ModelSpec::new(
            ModelKind::IndependentSum(IndependentSumParams {
                n,
                summand: Summand::Rademacher,
            }),
            seed,
        )
    }

    fn order(r: u32) -> MomentOrder {
        MomentOrder::new(r).unwrap()
    }

    #[test]
    fn layout_validation() {
        let spec = rademacher(3, 0);
        assert!(estimate_central_moments(&spec, &[order(4)], 1000, 31, 0).is_err()); // not divisible
        assert!(estimate_central_moments(&spec, &[order(4)], 1000, 10, 0).is_err()); // too few batches
        assert!(estimate_central_moments(&spec, &[order(14)], 1000, 50, 0).is_err()); // order cap
    }

    #[test]
    fn rademacher_fourth_norm_converges() {
        let spec = rademacher(3, 1);
        let est = estimate_central_moments(&spec, &[order(4)], 200_000, 50, 0).unwrap();
        let exact = 21f64.powf(0.25);
        assert!(
            (est[0].point - exact).abs() <= 3.0 * est[0].std_error,
            "point {} vs exact {exact} (se {})",
            est[0].point,
            est[0].std_error
        );
        assert!(est[0].std_error > 0.0);
    }

    #[test]
    fn exponential_sum_second_norm() {
        let spec = ModelSpec::new(
            ModelKind::IndependentSum(IndependentSumParams {
                n: 50,
                summand: Summand::CenteredExponential { rate: 1.0 },
            }),
            3,
        );
        let est = estimate_central_moments(&spec, &[order(2)], 100_000, 50, 0).unwrap();
        let exact = 50f64.sqrt();
        assert!(
            (est[0].point - exact).abs() <= 3.0 * est[0].std_error,
            "point {} vs exact {exact} (se {})",
            est[0].point,
            est[0].std_error
        );
    }

    #[test]
    fn identity_z_scores_small_for_faithful_coupling() {
        let spec = rademacher(20, 5);
        let report = check_stein_identity(&spec, 3, 50_000, 0).unwrap();
        for row in &report.rows {
            assert!(row.z_score.abs() <= 4.0, "degree {} z = {}", row.degree, row.z_score);
        }
        // degree 1: lhs ~ E(GD) = sigma^2 = 20
        assert_relative_eq!(report.rows[0].lhs, 20.0, max_relative = 0.05);
    }

    #[test]
    fn corrupted_coupling_fails_identity() {
        let mut spec = rademacher(20, 5);
        spec.g_scale = 1.1;
        let report = check_stein_identity(&spec, 1, 200_000, 0).unwrap();
        assert!(
            report.rows[0].z_score.abs() > 4.0,
            "corrupted z = {}",
            report.rows[0].z_score
        );
    }

    #[test]
    fn tail_estimates_match_enumeration() {
        // Rademacher n=3: P(|W| > 2) = P(|W|=3) = 1/4
        let spec = rademacher(3, 9);
        let tails = estimate_tail(&spec, &[0.0, 2.0, 4.0], 100_000, 0).unwrap();
        assert!((tails[0].p_hat - 1.0).abs() < 1e-12); // |W| is 1 or 3, always > 0
        assert!((tails[1].p_hat - 0.25).abs() <= 3.0 * tails[1].se);
        assert_eq!(tails[2].p_hat, 0.0);
        assert!(estimate_tail(&spec, &[1.0], 100, 0).is_err());
    }

    #[test]
    fn verdict_logic() {
        let est = MomentEstimate {
            order: order(4),
            point: 2.1407,
            std_error: 0.01,
            n_samples: 1000,
            n_batches: 50,
        };
        let holds = verify_bounds(
            &[(order(4), BoundValue::applicable("thm1", 4.111))],
            &[est],
        )
        .unwrap();
        assert_eq!(holds[0].status, VerdictStatus::Holds);

        let violated = verify_bounds(
            &[(order(4), BoundValue::applicable("thm1", 2.0))],
            &[est],
        )
        .unwrap();
        assert_eq!(violated[0].status, VerdictStatus::Violated);

        let inconclusive = verify_bounds(
            &[(order(4), BoundValue::applicable("thm1", 2.145))],
            &[est],
        )
        .unwrap();
        assert_eq!(inconclusive[0].status, VerdictStatus::Inconclusive);

        let inapplicable = verify_bounds(
            &[(order(4), BoundValue::inapplicable("thm1", "eps"))],
            &[est],
        )
        .unwrap();
        assert_eq!(inapplicable[0].status, VerdictStatus::BoundInapplicable);

        // order mismatch is a configuration error
        assert!(verify_bounds(&[(order(6), BoundValue::applicable("x", 1.0))], &[est]).is_err());
    }

    #[test]
    fn reproducible_across_repeat_runs() {
        let spec = rademacher(40, 2);
        let a = estimate_central_moments(&spec, &[order(2), order(4)], 20_000, 40, 7).unwrap();
        let b = estimate_central_moments(&spec, &[order(2), order(4)], 20_000, 40, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_model_has_zero_moments_and_zero_z() {
        // a constant statistic makes W identically n: central moments are 0
        // and the identity z-score is defined as 0
        use crate::models::ErParams;
        use crate::statistic::{CustomStatistic, StatisticSpec};
        use std::sync::Arc;
        let spec = ModelSpec::new(
            ModelKind::ErNeighbourhood(ErParams {
                n: 30,
                lambda: 1.0,
                r: 1,
                statistic: StatisticSpec::Custom(CustomStatistic {
                    c: 1.0,
                    beta: 0.0,
                    r: 1,
                    eval: Arc::new(|_| 1.0),
                }),
                mu_x: crate::models::MuX::Exact { value: 1.0 },
            }),
            4,
        );
        let est = estimate_central_moments(&spec, &[order(2), order(4)], 3_000, 30, 0).unwrap();
        for e in &est {
            assert_eq!(e.point, 0.0);
            assert_eq!(e.std_error, 0.0);
        }
        let report = check_stein_identity(&spec, 3, 2_000, 0).unwrap();
        for row in &report.rows {
            assert_eq!(row.z_score, 0.0);
            assert_eq!(row.lhs, 0.0);
            assert_eq!(row.rhs, 0.0);
        }
    }
}
