//! The edge-resampling Stein coupling for sums of neighbourhood statistics
//! `W = Σ_i U(N_r(i, G_n))` on a sparse Erdős–Rényi graph.
//!
//! A draw resamples every pair with at least one endpoint in `V(N_r(J))`
//! with fresh `Bernoulli(λ/n)` indicators, giving `W′` with `L(W′) = L(W)`,
//! and `G = −n(X_J − μ_X)`. Only vertices within distance `r` of a changed
//! edge (in either graph) are re-evaluated.

use std::collections::{HashMap, HashSet};

use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{CouplingSampler, MeanEstimate};
use crate::coupling::CouplingSample;
use crate::error::{Error, Result};
use crate::graph::{generate_er, r_neighbourhood, GraphOverlay, NeighbourAccess, SparseGraph};
use crate::statistic::{evaluate_statistic, StatisticSpec};
use crate::streams::{replicate_rng, PILOT_STREAM_BASE};

/// How `μ_X = E U(N_r(1))` is obtained: a closed form where one is wired in
/// (degree statistics), a user-supplied exact value, or a pilot Monte Carlo
/// estimate whose standard error is carried into verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuX {
    Auto,
    Exact { value: f64 },
    Estimated { n_pilot: u64 },
}

impl Default for MuX {
    fn default() -> Self {
        MuX::Auto
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErParams {
    pub n: u64,
    /// Edge probability is `λ/n`.
    pub lambda: f64,
    /// Neighbourhood radius; must match the statistic's declared radius.
    pub r: u32,
    pub statistic: StatisticSpec,
    #[serde(default)]
    pub mu_x: MuX,
}

pub struct ErNeighbourhoodSampler {
    n: usize,
    p: f64,
    r: u32,
    statistic: StatisticSpec,
    mu_x: f64,
    mu_x_se: f64,
}

impl ErNeighbourhoodSampler {
    pub fn new(params: &ErParams, model_seed: u64) -> Result<Self> {
        if params.n < 2 {
            return Err(Error::domain("er model needs n >= 2"));
        }
        if !(params.lambda > 0.0) || params.lambda > params.n as f64 {
            return Err(Error::domain(format!(
                "lambda must satisfy 0 < lambda <= n, got {}",
                params.lambda
            )));
        }
        if params.r == 0 {
            return Err(Error::domain("radius r must be >= 1"));
        }
        if params.r != params.statistic.radius() {
            return Err(Error::config(format!(
                "radius mismatch: params.r = {} but the statistic needs r = {}",
                params.r,
                params.statistic.radius()
            )));
        }
        let n = params.n as usize;
        let p = params.lambda / params.n as f64;
        let (mu_x, mu_x_se) = match params.mu_x {
            MuX::Exact { value } => (value, 0.0),
            MuX::Auto => match &params.statistic {
                StatisticSpec::DegreeIndicator { degrees } => {
                    (degree_indicator_mean(n, p, degrees), 0.0)
                }
                _ => pilot_mu_x(params, model_seed, 10_000)?,
            },
            MuX::Estimated { n_pilot } => {
                if n_pilot == 0 {
                    return Err(Error::config(
                        "mu_x estimation requested with zero pilot samples",
                    ));
                }
                pilot_mu_x(params, model_seed, n_pilot)?
            }
        };
        Ok(ErNeighbourhoodSampler {
            n,
            p,
            r: params.r,
            statistic: params.statistic.clone(),
            mu_x,
            mu_x_se,
        })
    }

    pub fn mu_x(&self) -> (f64, f64) {
        (self.mu_x, self.mu_x_se)
    }

    fn eval_one(&self, g: &impl NeighbourAccess, i: u32) -> f64 {
        // degree statistics need no BFS
        if let StatisticSpec::DegreeIndicator { degrees } = &self.statistic {
            let deg = g.neighbours_of(i).len() as u32;
            return if degrees.contains(&deg) { 1.0 } else { 0.0 };
        }
        let nbhd = r_neighbourhood(g, i, self.r).expect("vertex in range");
        evaluate_statistic(&self.statistic, &nbhd).expect("radius validated at construction")
    }
}

/// `P[deg ∈ S]` for `deg ~ Bi(n−1, p)`.
fn degree_indicator_mean(n: usize, p: f64, degrees: &std::collections::BTreeSet<u32>) -> f64 {
    let trials = (n - 1) as f64;
    degrees
        .iter()
        .filter(|&&d| (d as usize) < n)
        .map(|&d| {
            let d_f = f64::from(d);
            if p >= 1.0 {
                return if d as usize == n - 1 { 1.0 } else { 0.0 };
            }
            let log_pmf = ln_gamma(trials + 1.0)
                - ln_gamma(d_f + 1.0)
                - ln_gamma(trials - d_f + 1.0)
                + d_f * p.ln()
                + (trials - d_f) * (1.0 - p).ln();
            log_pmf.exp()
        })
        .sum()
}

fn pilot_mu_x(params: &ErParams, model_seed: u64, n_pilot: u64) -> Result<(f64, f64)> {
    let n = params.n as usize;
    let p = params.lambda / params.n as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for j in 0..n_pilot {
        let mut rng = replicate_rng(model_seed, PILOT_STREAM_BASE + j);
        let g = generate_er(n, p, &mut rng)?;
        let nbhd = r_neighbourhood(&g, 0, params.r)?;
        let x = evaluate_statistic(&params.statistic, &nbhd)?;
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / n_pilot as f64;
    let var = (sum_sq / n_pilot as f64 - mean * mean).max(0.0);
    Ok((mean, (var / n_pilot as f64).sqrt()))
}

/// Multi-source BFS: all vertices within distance `r` of any source.
fn within_distance(g: &impl NeighbourAccess, sources: &[u32], r: u32) -> HashSet<u32> {
    let mut seen: HashSet<u32> = sources.iter().copied().collect();
    let mut frontier: Vec<u32> = sources.to_vec();
    for _ in 0..r {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in g.neighbours_of(u) {
                if seen.insert(v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    seen
}

impl ErNeighbourhoodSampler {
    /// Resamples every pair meeting `V(N_r(j))` with fresh indicators and
    /// returns the rewired view of the graph together with the endpoints of
    /// every edge that actually changed.
    fn resample<'a>(
        &self,
        base: &'a SparseGraph,
        j: u32,
        rng: &mut ChaCha8Rng,
    ) -> (GraphOverlay<'a>, Vec<u32>) {
        let n = self.n;
        let nbhd_j = r_neighbourhood(base, j, self.r).expect("j in range");
        let mut v_sorted: Vec<u32> = nbhd_j.vertices.iter().map(|&(v, _)| v).collect();
        v_sorted.sort_unstable();
        let in_v: HashSet<u32> = v_sorted.iter().copied().collect();

        let dist = rand::distr::Bernoulli::new(self.p).expect("validated p");
        let mut fresh_rows: HashMap<u32, Vec<u32>> =
            v_sorted.iter().map(|&u| (u, Vec::new())).collect();
        let mut changed: Vec<u32> = Vec::new();

        // pairs inside V x V
        for (ai, &u) in v_sorted.iter().enumerate() {
            for &v in &v_sorted[ai + 1..] {
                let fresh = dist.sample(rng);
                if fresh {
                    fresh_rows.get_mut(&u).unwrap().push(v);
                    fresh_rows.get_mut(&v).unwrap().push(u);
                }
                if fresh != base.has_edge(u, v) {
                    changed.push(u);
                    changed.push(v);
                }
            }
        }

        // pairs (u in V, l outside V): geometric skipping over all n slots,
        // discarding hits that land inside V or on u itself
        let log_q = (1.0 - self.p).ln();
        let mut gained_out: HashMap<u32, Vec<u32>> = HashMap::new();
        for &u in &v_sorted {
            let mut hit_set: HashSet<u32> = HashSet::new();
            if self.p >= 1.0 {
                for l in 0..n as u32 {
                    if l != u && !in_v.contains(&l) {
                        hit_set.insert(l);
                    }
                }
            } else {
                let mut pos: i64 = -1;
                loop {
                    let roll: f64 = rng.random();
                    if roll <= f64::MIN_POSITIVE {
                        break;
                    }
                    let gap = (roll.ln() / log_q).floor() as i64;
                    pos = match pos.checked_add(gap + 1) {
                        Some(p) if p < n as i64 => p,
                        _ => break,
                    };
                    let l = pos as u32;
                    if l != u && !in_v.contains(&l) {
                        hit_set.insert(l);
                    }
                }
            }
            // fresh out-of-V neighbours of u
            for &l in &hit_set {
                fresh_rows.get_mut(&u).unwrap().push(l);
                gained_out.entry(l).or_default().push(u);
                if !base.has_edge(u, l) {
                    changed.push(u);
                    changed.push(l);
                }
            }
            // old out-of-V edges of u not redrawn are removed
            for &l in base.neighbours(u) {
                if !in_v.contains(&l) && !hit_set.contains(&l) {
                    changed.push(u);
                    changed.push(l);
                }
            }
        }

        // assemble replaced rows: all of V, plus outside vertices whose
        // V-incidence changed
        let mut replaced: HashMap<u32, Vec<u32>> = HashMap::new();
        for (&u, row) in &fresh_rows {
            let mut r = row.clone();
            r.sort_unstable();
            replaced.insert(u, r);
        }
        let mut touched_out: HashSet<u32> = gained_out.keys().copied().collect();
        for &u in &v_sorted {
            for &l in base.neighbours(u) {
                if !in_v.contains(&l) {
                    touched_out.insert(l);
                }
            }
        }
        for l in touched_out {
            let mut row: Vec<u32> = base
                .neighbours(l)
                .iter()
                .copied()
                .filter(|v| !in_v.contains(v))
                .collect();
            if let Some(gained) = gained_out.get(&l) {
                row.extend(gained.iter().copied());
            }
            row.sort_unstable();
            replaced.insert(l, row);
        }
        changed.sort_unstable();
        changed.dedup();
        (GraphOverlay::new(base, replaced), changed)
    }

    /// Incremental `W′`: re-evaluate only vertices within distance `r` of a
    /// changed edge, in either the old or the new graph.
    fn w_prime_incremental(
        &self,
        base: &SparseGraph,
        overlay: &GraphOverlay<'_>,
        changed: &[u32],
        xs: &[f64],
        w: f64,
    ) -> f64 {
        let mut affected: Vec<u32> = within_distance(base, changed, self.r)
            .union(&within_distance(overlay, changed, self.r))
            .copied()
            .collect();
        affected.sort_unstable();
        let mut w_prime = w;
        for &i in &affected {
            w_prime += self.eval_one(overlay, i) - xs[i as usize];
        }
        w_prime
    }
}

impl CouplingSampler for ErNeighbourhoodSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> CouplingSample {
        let n = self.n;
        let base = generate_er(n, self.p, rng).expect("validated p");

        let xs: Vec<f64> = (0..n as u32).map(|i| self.eval_one(&base, i)).collect();
        let w: f64 = xs.iter().sum();

        let j = rng.random_range(0..n as u32);
        let (overlay, changed) = self.resample(&base, j, rng);
        let w_prime = self.w_prime_incremental(&base, &overlay, &changed, &xs, w);

        let g_val = -(n as f64) * (xs[j as usize] - self.mu_x);
        CouplingSample::exact(w, w_prime, g_val)
    }

    fn mean(&self) -> MeanEstimate {
        if self.mu_x_se == 0.0 {
            MeanEstimate::Exact(self.n as f64 * self.mu_x)
        } else {
            MeanEstimate::Estimated {
                value: self.n as f64 * self.mu_x,
                se: self.n as f64 * self.mu_x_se,
            }
        }
    }

    fn variance(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistic::Pattern;
    use approx::assert_relative_eq;

    fn isolated_params(n: u64, lambda: f64) -> ErParams {
        ErParams {
            n,
            lambda,
            r: 1,
            statistic: StatisticSpec::isolated_vertex(),
            mu_x: MuX::Auto,
        }
    }

    #[test]
    fn construction_validates() {
        assert!(ErNeighbourhoodSampler::new(&isolated_params(200, 2.0), 0).is_ok());
        assert!(ErNeighbourhoodSampler::new(&isolated_params(200, 0.0), 0).is_err());
        let mut params = isolated_params(200, 2.0);
        params.r = 2; // statistic wants r = 1
        assert!(ErNeighbourhoodSampler::new(&params, 0).is_err());
        let mut params = isolated_params(200, 2.0);
        params.mu_x = MuX::Estimated { n_pilot: 0 };
        assert!(ErNeighbourhoodSampler::new(&params, 0).is_err());
    }

    #[test]
    fn isolated_vertex_mu_is_closed_form() {
        let s = ErNeighbourhoodSampler::new(&isolated_params(200, 2.0), 0).unwrap();
        let (mu_x, se) = s.mu_x();
        assert_eq!(se, 0.0);
        assert_relative_eq!(mu_x, (1.0 - 0.01f64).powi(199), max_relative = 1e-12);
        match s.mean() {
            MeanEstimate::Exact(m) => {
                assert_relative_eq!(m, 27.066600981406455, max_relative = 1e-10)
            }
            _ => panic!("expected exact mean"),
        }
    }

    /// Flattens an overlay into a plain graph for from-scratch recounts.
    fn materialise(overlay: &GraphOverlay<'_>, n: usize) -> SparseGraph {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for &v in overlay.neighbours_of(u) {
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        SparseGraph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn incremental_w_prime_matches_full_recount() {
        let specs = vec![
            StatisticSpec::isolated_vertex(),
            StatisticSpec::HighDegreeFewSmallNeighbours { d: 2, k: 1 },
            StatisticSpec::RootedSubgraphCount {
                pattern: Pattern::triangle(),
            },
        ];
        for spec in specs {
            let n = 60usize;
            let params = ErParams {
                n: n as u64,
                lambda: 3.0,
                r: spec.radius(),
                statistic: spec.clone(),
                mu_x: MuX::Exact { value: 0.1 },
            };
            let s = ErNeighbourhoodSampler::new(&params, 0).unwrap();
            for rep in 0..60 {
                let mut rng = replicate_rng(21, rep);
                let base = generate_er(n, 3.0 / n as f64, &mut rng).unwrap();
                let xs: Vec<f64> = (0..n as u32).map(|i| s.eval_one(&base, i)).collect();
                let w: f64 = xs.iter().sum();
                let j = rng.random_range(0..n as u32);
                let (overlay, changed) = s.resample(&base, j, &mut rng);

                let incremental = s.w_prime_incremental(&base, &overlay, &changed, &xs, w);
                let rebuilt = materialise(&overlay, n);
                let full: f64 = (0..n as u32).map(|i| s.eval_one(&rebuilt, i)).sum();
                assert_eq!(incremental, full, "incremental W' diverged (rep {rep})");

                // the overlay's rows must be mutually consistent
                for u in 0..n as u32 {
                    for &v in overlay.neighbours_of(u) {
                        assert!(overlay.neighbours_of(v).contains(&u));
                        assert_ne!(u, v);
                    }
                }
                assert_eq!(overlay.edge_count(), rebuilt.edge_count());
            }
        }
    }

    #[test]
    fn lambda_near_zero_keeps_w_fixed() {
        // empty-ish graph: resampling touches almost nothing; on the event
        // that no edges exist anywhere, D = 0 exactly
        let params = ErParams {
            n: 50,
            lambda: 1e-9,
            r: 1,
            statistic: StatisticSpec::isolated_vertex(),
            mu_x: MuX::Auto,
        };
        let s = ErNeighbourhoodSampler::new(&params, 0).unwrap();
        for rep in 0..50 {
            let mut rng = replicate_rng(1, rep);
            let sample = s.sample(&mut rng);
            assert_eq!(sample.w, 50.0);
            assert_eq!(sample.d, 0.0);
        }
    }

    #[test]
    fn resampled_graph_stays_er() {
        // mean edge count of the W'-graphs matches Bi(C(n,2), p)
        let n = 80usize;
        let lambda = 2.0;
        let p = lambda / n as f64;
        let params = isolated_params(n as u64, lambda);
        let s = ErNeighbourhoodSampler::new(&params, 0).unwrap();
        let reps = 20_000u64;
        let mut total_edges = 0u64;
        for rep in 0..reps {
            let mut rng = replicate_rng(33, rep);
            let base = generate_er(n, p, &mut rng).unwrap();
            let j = rng.random_range(0..n as u32);
            let (overlay, _) = s.resample(&base, j, &mut rng);
            total_edges += overlay.edge_count() as u64;
        }
        let pairs = (n * (n - 1) / 2) as f64;
        let mean = total_edges as f64 / reps as f64;
        let se = (pairs * p * (1.0 - p) / reps as f64).sqrt();
        assert!(
            (mean - pairs * p).abs() <= 3.0 * se,
            "mean edges {mean}, expected {} +- {se}",
            pairs * p
        );
    }
}
