//! Neighbourhood statistics `U` evaluated on rooted `r`-neighbourhoods, with
//! their declared growth bounds `|U(G)| ≤ c·|V(G)|^β`.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{generate_er, r_neighbourhood, RootedNeighbourhood};
use crate::mc::MomentEstimate;
use crate::norms::MomentOrder;
use crate::streams::replicate_rng;

/// A small pattern graph for rooted subgraph counting, on vertices
/// `0..vertex_count` (at most 5), connected and simple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPattern", into = "RawPattern")]
pub struct Pattern {
    vertex_count: u32,
    edges: Vec<(u32, u32)>,
    diameter: u32,
    automorphisms: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    vertex_count: u32,
    edges: Vec<(u32, u32)>,
}

impl TryFrom<RawPattern> for Pattern {
    type Error = Error;
    fn try_from(raw: RawPattern) -> Result<Pattern> {
        Pattern::new(raw.vertex_count, &raw.edges)
    }
}

impl From<Pattern> for RawPattern {
    fn from(p: Pattern) -> RawPattern {
        RawPattern {
            vertex_count: p.vertex_count,
            edges: p.edges,
        }
    }
}

impl Pattern {
    pub fn new(vertex_count: u32, edges: &[(u32, u32)]) -> Result<Self> {
        if vertex_count == 0 || vertex_count > 5 {
            return Err(Error::domain(
                "pattern graphs are limited to 1..=5 vertices",
            ));
        }
        let mut adj = vec![BTreeSet::new(); vertex_count as usize];
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count || u == v {
                return Err(Error::domain(format!("bad pattern edge ({u},{v})")));
            }
            adj[u as usize].insert(v);
            adj[v as usize].insert(u);
        }
        let mut edges: Vec<(u32, u32)> = edges
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        // connectivity and diameter via BFS from every vertex
        let mut diameter = 0u32;
        for s in 0..vertex_count {
            let mut dist = vec![u32::MAX; vertex_count as usize];
            dist[s as usize] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u as usize] {
                    if dist[v as usize] == u32::MAX {
                        dist[v as usize] = dist[u as usize] + 1;
                        queue.push_back(v);
                    }
                }
            }
            let far = *dist.iter().max().unwrap();
            if far == u32::MAX {
                return Err(Error::domain("pattern graph must be connected"));
            }
            diameter = diameter.max(far);
        }

        let automorphisms = count_automorphisms(vertex_count, &edges);
        Ok(Pattern {
            vertex_count,
            edges,
            diameter,
            automorphisms,
        })
    }

    pub fn triangle() -> Self {
        Pattern::new(3, &[(0, 1), (1, 2), (0, 2)]).expect("triangle is valid")
    }

    pub fn vertex_count(&self) -> u32 {
        self.vertex_count
    }

    pub fn diameter(&self) -> u32 {
        // a single vertex has diameter 0; counting still uses radius >= 1
        self.diameter.max(1)
    }
}

/// Number of adjacency-preserving permutations (graph automorphisms).
fn count_automorphisms(n: u32, edges: &[(u32, u32)]) -> u64 {
    let has = |u: u32, v: u32| edges.contains(&(u.min(v), u.max(v)));
    let mut count = 0u64;
    let mut perm: Vec<u32> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let ok = edges.iter().all(|&(u, v)| has(p[u as usize], p[v as usize]))
            && (0..n).all(|u| {
                (u + 1..n).all(|v| has(u, v) || !has(p[u as usize], p[v as usize]))
            });
        if ok {
            count += 1;
        }
    });
    count
}

fn permute(items: &mut Vec<u32>, start: usize, visit: &mut impl FnMut(&[u32])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// A programmatic statistic with declared growth `(c, β)` and radius.
#[derive(Clone)]
pub struct CustomStatistic {
    pub c: f64,
    pub beta: f64,
    pub r: u32,
    pub eval: Arc<dyn Fn(&RootedNeighbourhood) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for CustomStatistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomStatistic")
            .field("c", &self.c)
            .field("beta", &self.beta)
            .field("r", &self.r)
            .finish()
    }
}

/// The statistic `U` applied to each rooted neighbourhood. Every variant
/// declares the growth bound `(c, β)` and the radius it needs, which makes
/// the moment theorem's constant computable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticSpec {
    /// `U = 1{deg(root) ∈ degrees}`, radius 1, `(c, β) = (1, 0)`.
    DegreeIndicator { degrees: BTreeSet<u32> },
    /// Number of copies of `pattern` containing the root, radius
    /// `diameter(pattern)`, `(c, β) = (|V(H)|, |V(H)|−1)`.
    RootedSubgraphCount { pattern: Pattern },
    /// `U = 1{deg(root) ≥ d and at most k neighbours have degree ≤ d}`,
    /// radius 2, `(c, β) = (1, 0)`.
    HighDegreeFewSmallNeighbours { d: u32, k: u32 },
    /// Programmatic statistic; not serialisable.
    #[serde(skip)]
    Custom(CustomStatistic),
}

impl StatisticSpec {
    pub fn isolated_vertex() -> Self {
        StatisticSpec::DegreeIndicator {
            degrees: BTreeSet::from([0]),
        }
    }

    /// The radius the statistic must be evaluated at.
    pub fn radius(&self) -> u32 {
        match self {
            StatisticSpec::DegreeIndicator { .. } => 1,
            StatisticSpec::RootedSubgraphCount { pattern } => pattern.diameter(),
            StatisticSpec::HighDegreeFewSmallNeighbours { .. } => 2,
            StatisticSpec::Custom(c) => c.r,
        }
    }

    /// The declared growth bound `(c, β)` with `|U(G)| ≤ c|V(G)|^β`.
    pub fn growth(&self) -> (f64, f64) {
        match self {
            StatisticSpec::DegreeIndicator { .. } => (1.0, 0.0),
            StatisticSpec::RootedSubgraphCount { pattern } => (
                f64::from(pattern.vertex_count()),
                f64::from(pattern.vertex_count() - 1),
            ),
            StatisticSpec::HighDegreeFewSmallNeighbours { .. } => (1.0, 0.0),
            StatisticSpec::Custom(c) => (c.c, c.beta),
        }
    }
}

/// Evaluates `U` on a rooted neighbourhood whose radius matches the spec.
/// In debug builds the declared growth bound is asserted on every call.
pub fn evaluate_statistic(spec: &StatisticSpec, nbhd: &RootedNeighbourhood) -> Result<f64> {
    if nbhd.radius != spec.radius() {
        return Err(Error::domain(format!(
            "statistic needs radius {}, neighbourhood was computed at radius {}",
            spec.radius(),
            nbhd.radius
        )));
    }
    let value = match spec {
        StatisticSpec::DegreeIndicator { degrees } => {
            let deg = nbhd
                .vertices
                .iter()
                .filter(|&&(_, d)| d == 1)
                .count() as u32;
            if degrees.contains(&deg) {
                1.0
            } else {
                0.0
            }
        }
        StatisticSpec::RootedSubgraphCount { pattern } => count_rooted_copies(pattern, nbhd) as f64,
        StatisticSpec::HighDegreeFewSmallNeighbours { d, k } => {
            let mut degree: HashMap<u32, u32> = HashMap::new();
            for &(u, v) in &nbhd.edges {
                *degree.entry(u).or_insert(0) += 1;
                *degree.entry(v).or_insert(0) += 1;
            }
            let root_deg = degree.get(&nbhd.root).copied().unwrap_or(0);
            if root_deg < *d {
                0.0
            } else {
                let small = nbhd
                    .vertices
                    .iter()
                    .filter(|&&(v, dist)| {
                        dist == 1 && degree.get(&v).copied().unwrap_or(0) <= *d
                    })
                    .count() as u32;
                if small <= *k {
                    1.0
                } else {
                    0.0
                }
            }
        }
        StatisticSpec::Custom(c) => (c.eval)(nbhd),
    };
    let (c, beta) = spec.growth();
    debug_assert!(
        value.abs() <= c * (nbhd.vertex_count() as f64).powf(beta) + 1e-9,
        "statistic violated its declared growth bound: |{value}| > {c}*{}^{beta}",
        nbhd.vertex_count()
    );
    Ok(value)
}

/// Number of copies of the pattern in the neighbourhood whose vertex set
/// contains the root: injective edge-preserving maps, divided by the number
/// of automorphisms of the pattern.
fn count_rooted_copies(pattern: &Pattern, nbhd: &RootedNeighbourhood) -> u64 {
    let verts: Vec<u32> = nbhd.vertices.iter().map(|&(v, _)| v).collect();
    let index: HashMap<u32, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let m = verts.len();
    let mut adj = vec![vec![false; m]; m];
    for &(u, v) in &nbhd.edges {
        let (iu, iv) = (index[&u], index[&v]);
        adj[iu][iv] = true;
        adj[iv][iu] = true;
    }
    let root_idx = index[&nbhd.root];

    let h = pattern.vertex_count as usize;
    let mut assignment: Vec<usize> = vec![usize::MAX; h];
    let mut used = vec![false; m];
    let mut maps_with_root = 0u64;

    // pattern adjacency for pruning
    let mut padj = vec![vec![false; h]; h];
    for &(u, v) in &pattern.edges {
        padj[u as usize][v as usize] = true;
        padj[v as usize][u as usize] = true;
    }

    fn dfs(
        pos: usize,
        h: usize,
        m: usize,
        padj: &[Vec<bool>],
        adj: &[Vec<bool>],
        assignment: &mut Vec<usize>,
        used: &mut Vec<bool>,
        root_idx: usize,
        count: &mut u64,
    ) {
        if pos == h {
            if assignment.iter().any(|&a| a == root_idx) {
                *count += 1;
            }
            return;
        }
        for cand in 0..m {
            if used[cand] {
                continue;
            }
            // all pattern edges to already-placed vertices must be present
            let ok = (0..pos).all(|prev| !padj[pos][prev] || adj[cand][assignment[prev]]);
            if ok {
                assignment[pos] = cand;
                used[cand] = true;
                dfs(pos + 1, h, m, padj, adj, assignment, used, root_idx, count);
                used[cand] = false;
                assignment[pos] = usize::MAX;
            }
        }
    }

    dfs(
        0,
        h,
        m,
        &padj,
        &adj,
        &mut assignment,
        &mut used,
        root_idx,
        &mut maps_with_root,
    );
    maps_with_root / pattern.automorphisms
}

/// Monte Carlo estimate of `‖N_r(0)‖_ℓ`, the `ℓ`-norm of the number of
/// vertices in an `r`-neighbourhood of `ER(n, λ/n)`, with batch-means
/// standard error. Comparison target for the closed-form norm bound.
pub fn neighbourhood_size_moments_mc(
    n: u64,
    lambda: f64,
    r: u32,
    ell: MomentOrder,
    n_samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    if n < 1 {
        return Err(Error::domain("n must be >= 1"));
    }
    if !(lambda >= 0.0) || lambda > n as f64 {
        return Err(Error::domain(format!("lambda must be in [0, n], got {lambda}")));
    }
    let n_batches = 50u64;
    if n_samples == 0 || n_samples % n_batches != 0 {
        return Err(Error::config(format!(
            "n_samples must be a positive multiple of {n_batches}"
        )));
    }
    let per = n_samples / n_batches;
    let p = lambda / n as f64;
    let ell_i = ell.value() as i32;
    let mut batch_means = Vec::with_capacity(n_batches as usize);
    for b in 0..n_batches {
        let mut sum = 0.0f64;
        for i in b * per..(b + 1) * per {
            let mut rng = replicate_rng(seed, i);
            let g = generate_er(n as usize, p, &mut rng)?;
            let size = r_neighbourhood(&g, 0, r)?.vertex_count() as f64;
            sum += size.powi(ell_i);
        }
        batch_means.push(sum / per as f64);
    }
    let grand = batch_means.iter().sum::<f64>() / n_batches as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - grand).powi(2))
        .sum::<f64>()
        / (n_batches as f64 - 1.0);
    let se_m = (var / n_batches as f64).sqrt();
    let rf = f64::from(ell.value());
    Ok(MomentEstimate {
        order: ell,
        point: grand.powf(1.0 / rf),
        std_error: se_m / rf * grand.powf(1.0 / rf - 1.0),
        n_samples,
        n_batches,
    })
}
