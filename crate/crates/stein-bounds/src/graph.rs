//! Sparse Erdős–Rényi graphs, BFS `r`-neighbourhoods with a distinguished
//! root, and the copy-on-write overlay used by the edge-resampling coupling.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..n` as sorted adjacency lists.
/// Immutable after generation; share freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    adj: Vec<Vec<u32>>,
}

impl SparseGraph {
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::domain(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::domain(format!("self-loop at vertex {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        Ok(SparseGraph { adj })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbours(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edge-list dump, one `u v` pair per line with `u < v`, sorted.
    pub fn write_edge_list(&self, out: &mut impl Write) -> Result<()> {
        for (u, row) in self.adj.iter().enumerate() {
            for &v in row {
                if (u as u32) < v {
                    writeln!(out, "{u} {v}")?;
                }
            }
        }
        Ok(())
    }
}

/// Samples `ER(n, p)`: every unordered pair an edge independently with
/// probability `p`. Uses geometric skipping over the pair sequence, so the
/// cost is `O(n + p n²)` rather than `O(n²)`.
pub fn generate_er(n: usize, p: f64, rng: &mut impl Rng) -> Result<SparseGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("edge probability must be in [0,1], got {p}")));
    }
    let mut adj = vec![Vec::new(); n];
    if p == 0.0 || n < 2 {
        return Ok(SparseGraph { adj });
    }
    if p == 1.0 {
        for u in 0..n {
            adj[u] = (0..n as u32).filter(|&v| v != u as u32).collect();
        }
        return Ok(SparseGraph { adj });
    }

    // Walk the pairs (u,v), u < v, in row-major order, jumping ahead by
    // geometric gaps: with q = ln(1-p), a uniform U advances floor(ln U / q).
    let log_q = (1.0 - p).ln();
    let mut u = 0usize;
    let mut v = 0usize; // next candidate column within row u is v+1
    loop {
        let gap = {
            let r: f64 = rng.random();
            // r in [0,1); guard r = 0 -> very large skip
            if r <= f64::MIN_POSITIVE {
                usize::MAX / 2
            } else {
                (r.ln() / log_q).floor() as usize
            }
        };
        v = match v.checked_add(gap + 1) {
            Some(next) => next,
            None => break,
        };
        while v >= n {
            u += 1;
            if u >= n - 1 {
                break;
            }
            v = u + 1 + (v - n);
        }
        if u >= n - 1 || v >= n {
            break;
        }
        adj[u].push(v as u32);
        adj[v].push(u as u32);
    }
    for row in &mut adj {
        row.sort_unstable();
    }
    Ok(SparseGraph { adj })
}

/// The rooted subgraph induced by all vertices within distance `r` of the
/// root, including the edges between two distance-`r` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedNeighbourhood {
    pub root: u32,
    pub radius: u32,
    /// `(vertex, distance from root)`, root first, BFS order.
    pub vertices: Vec<(u32, u32)>,
    /// Induced edges `(u, v)` with `u < v`.
    pub edges: Vec<(u32, u32)>,
}

impl RootedNeighbourhood {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.vertices.iter().any(|&(u, _)| u == v)
    }

    /// Degree of `v` within the induced subgraph.
    pub fn degree_within(&self, v: u32) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }
}

/// Neighbour access shared by `SparseGraph` and the resampling overlay, so
/// BFS and statistics evaluate identically on both.
pub trait NeighbourAccess {
    fn n(&self) -> usize;
    fn neighbours_of(&self, v: u32) -> &[u32];
}

impl NeighbourAccess for SparseGraph {
    fn n(&self) -> usize {
        self.adj.len()
    }
    fn neighbours_of(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }
}

/// BFS truncated at depth `r` from `v`.
pub fn r_neighbourhood(g: &impl NeighbourAccess, v: u32, r: u32) -> Result<RootedNeighbourhood> {
    if v as usize >= g.n() {
        return Err(Error::domain(format!(
            "vertex {v} out of range for a graph on {} vertices",
            g.n()
        )));
    }
    let mut dist: HashMap<u32, u32> = HashMap::new();
    dist.insert(v, 0);
    let mut order = vec![(v, 0u32)];
    let mut frontier = vec![v];
    for depth in 1..=r {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbours_of(u) {
                if !dist.contains_key(&w) {
                    dist.insert(w, depth);
                    order.push((w, depth));
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    // induced edges, including those between two distance-r vertices
    let mut edges = Vec::new();
    for &(u, _) in &order {
        for &w in g.neighbours_of(u) {
            if u < w && dist.contains_key(&w) {
                edges.push((u, w));
            }
        }
    }
    edges.sort_unstable();
    Ok(RootedNeighbourhood {
        root: v,
        radius: r,
        vertices: order,
        edges,
    })
}

/// Copy-on-write view of a graph with some adjacency rows replaced. The base
/// graph is untouched, so `W` and `W′` can both be evaluated from one sample.
#[derive(Debug)]
pub struct GraphOverlay<'a> {
    base: &'a SparseGraph,
    replaced: HashMap<u32, Vec<u32>>,
    edge_delta: i64,
}

impl<'a> GraphOverlay<'a> {
    /// Builds the overlay from fully replaced rows. Rows must already be
    /// mutually consistent (u lists v iff v lists u).
    pub fn new(base: &'a SparseGraph, replaced: HashMap<u32, Vec<u32>>) -> Self {
        let mut edge_delta = 0i64;
        for (&v, row) in &replaced {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]), "overlay rows must be sorted");
            edge_delta += row.len() as i64 - base.degree(v) as i64;
        }
        // every changed edge touches at least one replaced row; edges between
        // two replaced rows are double counted by the sum above
        let mut within = 0i64;
        for (&v, row) in &replaced {
            for &w in row {
                if w > v && replaced.contains_key(&w) {
                    within += 1;
                }
            }
            for &w in base.neighbours(v) {
                if w > v && replaced.contains_key(&w) {
                    within -= 1;
                }
            }
        }
        GraphOverlay {
            base,
            replaced,
            edge_delta: edge_delta - within,
        }
    }

    pub fn edge_count(&self) -> usize {
        (self.base.edge_count() as i64 + self.edge_delta) as usize
    }

    /// Vertices whose adjacency row differs from the base graph.
    pub fn touched(&self) -> impl Iterator<Item = u32> + '_ {
        self.replaced.keys().copied()
    }
}

impl NeighbourAccess for GraphOverlay<'_> {
    fn n(&self) -> usize {
        self.base.n()
    }
    fn neighbours_of(&self, v: u32) -> &[u32] {
        match self.replaced.get(&v) {
            Some(row) => row,
            None => self.base.neighbours(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path4() -> SparseGraph {
        SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn generation_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = generate_er(100, 0.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = generate_er(20, 1.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 20 * 19 / 2);
        assert!((0..20).all(|v| g.degree(v) == 19));
        assert!(generate_er(10, 1.5, &mut rng).is_err());
    }

    #[test]
    fn generation_symmetry_and_simplicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = generate_er(300, 0.02, &mut rng).unwrap();
        for u in 0..300u32 {
            let row = g.neighbours(u);
            assert!(row.windows(2).all(|w| w[0] < w[1]), "row not sorted/dedup at {u}");
            for &v in row {
                assert_ne!(u, v, "self-loop at {u}");
                assert!(g.has_edge(v, u), "asymmetry {u}-{v}");
            }
        }
    }

    #[test]
    fn generation_mean_edge_count() {
        // n=200, p=0.01: mean edges = C(200,2) * 0.01 = 199
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let reps = 10_000;
        let mut total = 0usize;
        for _ in 0..reps {
            total += generate_er(200, 0.01, &mut rng).unwrap().edge_count();
        }
        let mean = total as f64 / reps as f64;
        let pairs = 199.0 * 100.0;
        let se = (pairs * 0.01 * 0.99 / reps as f64).sqrt();
        assert!(
            (mean - 199.0).abs() <= 3.0 * se,
            "mean edge count {mean} vs 199 +- {se}"
        );
    }

    #[test]
    fn neighbourhood_examples() {
        let g = path4();
        let nb = r_neighbourhood(&g, 1, 0).unwrap();
        assert_eq!(nb.vertices, vec![(1, 0)]);
        assert!(nb.edges.is_empty());

        let nb = r_neighbourhood(&g, 1, 1).unwrap();
        let mut vs: Vec<u32> = nb.vertices.iter().map(|&(v, _)| v).collect();
        vs.sort_unstable();
        assert_eq!(vs, vec![0, 1, 2]);
        assert_eq!(nb.edges, vec![(0, 1), (1, 2)]);

        // triangle: the 1-2 edge joins two distance-1 vertices and is included
        let tri = SparseGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let nb = r_neighbourhood(&tri, 0, 1).unwrap();
        assert_eq!(nb.vertex_count(), 3);
        assert_eq!(nb.edges, vec![(0, 1), (0, 2), (1, 2)]);

        assert!(r_neighbourhood(&g, 9, 1).is_err());
    }

    #[test]
    fn neighbourhood_nested_in_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = generate_er(150, 2.0 / 150.0, &mut rng).unwrap();
        for v in [0u32, 5, 77] {
            let mut prev: Vec<u32> = Vec::new();
            for r in 0..=4 {
                let nb = r_neighbourhood(&g, v, r).unwrap();
                let mut vs: Vec<u32> = nb.vertices.iter().map(|&(u, _)| u).collect();
                vs.sort_unstable();
                assert!(prev.iter().all(|u| vs.binary_search(u).is_ok()),
                    "N_{r} lost vertices present at smaller radius");
                assert!(vs.len() >= prev.len());
                prev = vs;
            }
        }
    }

    #[test]
    fn overlay_replaces_rows_and_counts_edges() {
        let g = path4(); // 0-1-2-3: 3 edges
        // rewire: drop 1-2, add 0-2; rows 0,1,2 change
        let mut replaced = HashMap::new();
        replaced.insert(0u32, vec![1u32, 2]);
        replaced.insert(1u32, vec![0u32]);
        replaced.insert(2u32, vec![0u32, 3]);
        let ov = GraphOverlay::new(&g, replaced);
        assert_eq!(ov.neighbours_of(0), &[1, 2]);
        assert_eq!(ov.neighbours_of(3), &[2]); // untouched row from base
        assert_eq!(ov.edge_count(), 3);
        let nb = r_neighbourhood(&ov, 0, 1).unwrap();
        assert_eq!(nb.vertex_count(), 3);
    }

    #[test]
    fn edge_list_dump() {
        let g = path4();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n1 2\n2 3\n");
    }
}
