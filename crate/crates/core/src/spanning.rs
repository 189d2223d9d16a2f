//! Empirical spanning-tree entropy: sample G(n, c/n), keep the giant
//! component and count its spanning trees with the Matrix-Tree theorem.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::report::{EstimateReport, Truncation};
use crate::rng::{rng_from_key, substream};

/// Largest vertex count accepted by the dense factorization.
pub const DENSE_CAP: usize = 4000;

/// Pivots at or below this are treated as a breakdown. A connected graph on
/// `n <= DENSE_CAP` vertices has reduced-Laplacian pivots of at least `1/n`.
const PIVOT_FLOOR: f64 = 1e-8;

/// Simple undirected graph with edges stored as `(u, v)`, `u < v`, and
/// compressed adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    adj: Vec<u32>,
}

impl SparseGraph {
    /// Validates endpoints and rejects self-loops and repeated edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(domain("SparseGraph", "too many vertices"));
        }
        let mut es = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(domain("SparseGraph", format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(domain("SparseGraph", format!("self-loop at {a}")));
            }
            es.push((a.min(b) as u32, a.max(b) as u32));
        }
        let mut sorted = es.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(domain("SparseGraph", format!("repeated edge ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Self::build(n, es))
    }

    fn build(n: usize, edges: Vec<(u32, u32)>) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &(a, b) in &edges {
            deg[a as usize + 1] += 1;
            deg[b as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let offsets = deg;
        let mut fill = offsets.clone();
        let mut adj = vec![0u32; 2 * edges.len()];
        for &(a, b) in &edges {
            adj[fill[a as usize]] = b;
            fill[a as usize] += 1;
            adj[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        Self { n, edges, offsets, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(a, b)| (a as usize, b as usize))
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[self.offsets[v]..self.offsets[v + 1]].iter().map(|&w| w as usize)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Header `n m`, then one `u v` line per edge.
    pub fn to_edge_list_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for (a, b) in self.edges() {
            let _ = writeln!(s, "{a} {b}");
        }
        s
    }

    pub fn from_edge_list_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse_pair = |line: usize, l: &str| -> Result<(usize, usize)> {
            let mut it = l.split_whitespace().map(|x| x.parse::<usize>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Parse {
                    line,
                    msg: format!("expected two non-negative integers, got {l:?}"),
                }),
            }
        };
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let (n, m) = parse_pair(line, header)?;
        let edges = lines.map(|(i, l)| parse_pair(i, l)).collect::<Result<Vec<_>>>()?;
        if edges.len() != m {
            return Err(Error::Parse {
                line,
                msg: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n, &edges)
    }
}

/// G(n, p): every pair independently with probability `p`, enumerated by
/// geometric skips over the pair index.
pub fn sample_gnp(n: usize, p: f64, seed: u64) -> Result<SparseGraph> {
    let mut rng = rng_from_key(substream(seed, "spanning.sample_gnp", 0));
    gnp_with(n, p, &mut rng)
}

fn gnp_with(n: usize, p: f64, rng: &mut impl Rng) -> Result<SparseGraph> {
    if n < 1 || n > u32::MAX as usize {
        return Err(domain("sample_gnp", format!("n must be positive, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(domain("sample_gnp", format!("p must lie in [0, 1], got {p}")));
    }
    let mut edges = Vec::new();
    if p == 1.0 {
        for v in 1..n as u32 {
            edges.extend((0..v).map(|w| (w, v)));
        }
    } else if p > 0.0 {
        let ln_q = (-p).ln_1p();
        // Pairs (w, v) with w < v in order of v(v-1)/2 + w.
        let (mut v, mut w) = (1usize, -1i64);
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            w += 1 + (u.ln() / ln_q).floor() as i64;
            while v < n && w >= v as i64 {
                w -= v as i64;
                v += 1;
            }
            if v >= n {
                break;
            }
            edges.push((w as u32, v as u32));
        }
    }
    Ok(SparseGraph::build(n, edges))
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

/// Induced subgraph on the largest component (ties go to the component with
/// the smallest vertex id), relabeled `0..k` in increasing original id, and
/// the original id of every new vertex.
pub fn giant_component(g: &SparseGraph) -> (SparseGraph, Vec<usize>) {
    let mut parent: Vec<u32> = (0..g.n as u32).collect();
    let mut size = vec![1u32; g.n];
    for &(a, b) in &g.edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            let (big, small) = if size[ra as usize] >= size[rb as usize] { (ra, rb) } else { (rb, ra) };
            parent[small as usize] = big;
            size[big as usize] += size[small as usize];
        }
    }
    let mut best: Option<(u32, u32)> = None;
    for v in 0..g.n as u32 {
        let r = find(&mut parent, v);
        if best.is_none_or(|(_, s)| size[r as usize] > s) {
            best = Some((r, size[r as usize]));
        }
    }
    let (root, _) = best.expect("graphs have at least one vertex");
    let mut new_id = vec![u32::MAX; g.n];
    let mut mapping = Vec::new();
    for v in 0..g.n as u32 {
        if find(&mut parent, v) == root {
            new_id[v as usize] = mapping.len() as u32;
            mapping.push(v as usize);
        }
    }
    let edges = g
        .edges
        .iter()
        .filter(|&&(a, _)| new_id[a as usize] != u32::MAX)
        .map(|&(a, b)| (new_id[a as usize], new_id[b as usize]))
        .collect();
    (SparseGraph::build(mapping.len(), edges), mapping)
}

/// `ln τ(G)` and its normalization by the vertex count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub log_tau: f64,
    pub n_giant: usize,
    pub per_vertex: f64,
}

/// `ln τ(G)` as the log-determinant of the Laplacian with row and column 0
/// removed.
pub fn log_spanning_trees(g: &SparseGraph) -> Result<ComplexityResult> {
    log_spanning_trees_deleting(g, 0)
}

/// As [`log_spanning_trees`] with row and column `deleted` removed instead.
pub fn log_spanning_trees_deleting(g: &SparseGraph, deleted: usize) -> Result<ComplexityResult> {
    let n = g.n;
    if deleted >= n {
        return Err(domain("log_spanning_trees", format!("vertex {deleted} out of range")));
    }
    if n > DENSE_CAP {
        return Err(Error::CapExceeded {
            op: "log_spanning_trees",
            cap: DENSE_CAP,
        });
    }
    let log_tau = if n == 1 { 0.0 } else { log_det_reduced_laplacian(g, deleted)? };
    Ok(ComplexityResult {
        log_tau,
        n_giant: n,
        per_vertex: log_tau / n as f64,
    })
}

/// Symmetric Gaussian elimination on the upper triangle, rows stored
/// contiguously; `ln det = Σ ln pivot`.
fn log_det_reduced_laplacian(g: &SparseGraph, deleted: usize) -> Result<f64> {
    let m = g.n - 1;
    let idx = |v: usize| if v < deleted { Some(v) } else if v == deleted { None } else { Some(v - 1) };
    let mut a = vec![0.0f64; m * m];
    for v in 0..g.n {
        if let Some(i) = idx(v) {
            a[i * m + i] = g.degree(v) as f64;
            for w in g.neighbors(v) {
                if let Some(j) = idx(w) {
                    a[i * m + j] = -1.0;
                }
            }
        }
    }
    let mut log_det = 0.0;
    for k in 0..m {
        let pivot = a[k * m + k];
        if !(pivot > PIVOT_FLOOR) {
            return Err(Error::NonPositivePivot { index: k, value: pivot });
        }
        log_det += pivot.ln();
        let (head, tail) = a.split_at_mut((k + 1) * m);
        let row_k = &head[k * m..];
        for i in k + 1..m {
            let f = row_k[i] / pivot;
            if f == 0.0 {
                continue;
            }
            let row_i = &mut tail[(i - k - 1) * m..(i - k) * m];
            for (x, y) in row_i[i..].iter_mut().zip(&row_k[i..]) {
                *x -= f * y;
            }
        }
    }
    Ok(log_det)
}

/// Mean and standard error of `ln τ(giant) / |giant|` over `reps`
/// independent G(n, c/n) samples.
pub fn empirical_f(n: usize, c: f64, reps: u64, seed: u64) -> Result<EstimateReport> {
    const OP: &str = "empirical_f";
    if n > DENSE_CAP {
        return Err(Error::CapExceeded { op: OP, cap: DENSE_CAP });
    }
    if n < 2 {
        return Err(domain(OP, format!("need n >= 2, got {n}")));
    }
    if !(c > 1.0 && c < n as f64) {
        return Err(domain(OP, format!("need 1 < c < n, got {c}")));
    }
    if reps < 1 {
        return Err(domain(OP, "need at least one repetition"));
    }
    let start = Instant::now();
    let values = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_key(substream(seed, "spanning.empirical_f", i));
            let g = gnp_with(n, c / n as f64, &mut rng)?;
            let (giant, _) = giant_component(&g);
            Ok(log_spanning_trees(&giant)?.per_vertex)
        })
        .collect::<Result<Vec<f64>>>()?;
    let trunc = Truncation {
        graph_n: Some(n),
        ..Default::default()
    };
    Ok(EstimateReport::from_samples("spanning_f", c, &values, trunc, seed, start.elapsed()))
}
