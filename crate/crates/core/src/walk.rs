//! Simple random walk on rooted trees: exact return probabilities, the
//! generating function `V(s) = Σ p_k s^k`, killed walks, and the Monte Carlo
//! estimators of `∫ Σ_k p_k/k dPGW*_c` and of `f(c)`.
//!
//! `p_k` is computed exactly on the ball of radius `K/2`, which is all a walk
//! of length `K` that returns to the root can see. Exact balls of radius 30
//! are out of reach for supercritical trees, so the Monte Carlo driver
//! computes `p_k` exactly on the largest ball that fits a node budget and
//! adds an unbiased single-walk indicator for the longer lengths.

use std::time::Instant;

use rand::rngs::SmallRng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{f_bounds, GWParams};
use crate::domination::CoupledPair;
use crate::error::{domain, Error, Result};
use crate::report::{EstimateReport, Truncation};
use crate::rng::{child_key, rng_from_key, substream};
use crate::trees::{LazyTree, NodeId, PgwStarTree, RootedTree};

/// Walk length used when none is given.
pub const DEFAULT_K: u32 = 60;

/// Largest ball (in nodes) on which the estimators compute `p_k` exactly.
const BALL_BUDGET: usize = 512;

/// Death is certain before this many steps up to probability `1e-6`.
fn killed_walk_guard(s: f64) -> u32 {
    (1e6f64.ln() / (1.0 / s).ln()).ceil() as u32
}

/// Return probabilities `p_0 = 1, p_1, ..., p_K` of simple random walk
/// from the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnProfile {
    /// `probs[k] = p_k` for `0 <= k <= K`.
    pub probs: Vec<f64>,
    pub k: u32,
    /// Largest `k` for which nodes beyond the horizon cannot affect `p_k`.
    pub exact_upto: u32,
}

impl ReturnProfile {
    pub fn p(&self, k: u32) -> f64 {
        self.probs[k as usize]
    }

    /// `Σ_{k=1..K} p_k / k`.
    pub fn return_sum(&self) -> f64 {
        self.probs.iter().enumerate().skip(1).map(|(k, p)| p / k as f64).sum()
    }
}

/// The ball of radius `radius` around the root, in breadth-first order,
/// with true degrees.
struct Ball {
    depth: Vec<u32>,
    parent: Vec<u32>,
    first_child: Vec<u32>,
    n_children: Vec<u32>,
    degree: Vec<u32>,
}

impl Ball {
    fn new(t: &RootedTree, radius: u32) -> Self {
        let mut ids: Vec<NodeId> = vec![t.root()];
        let mut b = Ball {
            depth: vec![0],
            parent: vec![u32::MAX],
            first_child: Vec::new(),
            n_children: Vec::new(),
            degree: Vec::new(),
        };
        let mut i = 0;
        while i < ids.len() {
            let v = ids[i];
            b.degree.push(t.degree(v) as u32);
            b.first_child.push(ids.len() as u32);
            let mut n = 0;
            if b.depth[i] < radius {
                for w in t.children(v) {
                    ids.push(w);
                    b.depth.push(b.depth[i] + 1);
                    b.parent.push(i as u32);
                    n += 1;
                }
            }
            b.n_children.push(n);
            i += 1;
        }
        b
    }

    /// `p_0..p_kmax`; mass that can no longer return in time is dropped.
    fn return_probs(&self, kmax: u32) -> Vec<f64> {
        let n = self.depth.len();
        let mut mass = vec![0.0; n];
        let mut next = vec![0.0; n];
        mass[0] = 1.0;
        let mut probs = vec![1.0];
        for step in 1..=kmax {
            let budget = kmax - step;
            next.iter_mut().for_each(|x| *x = 0.0);
            for u in 0..n {
                let m = mass[u];
                if m == 0.0 {
                    continue;
                }
                let share = m / self.degree[u] as f64;
                if self.parent[u] != u32::MAX {
                    next[self.parent[u] as usize] += share;
                }
                if self.depth[u] < budget {
                    let f = self.first_child[u] as usize;
                    for x in &mut next[f..f + self.n_children[u] as usize] {
                        *x += share;
                    }
                }
            }
            std::mem::swap(&mut mass, &mut next);
            probs.push(mass[0]);
        }
        probs
    }
}

fn check_horizon(op: &'static str, t: &RootedTree, required: u32) -> Result<()> {
    match t.horizon() {
        Some(h) if h < required || !t.is_expanded(t.root()) => Err(Error::InsufficientDepth {
            op,
            required,
            available: h,
        }),
        _ => Ok(()),
    }
}

/// Exact `p_k(o; T)` for `k <= K`; needs every node at depth `<= ceil(K/2)`
/// to be expanded.
pub fn return_probs(t: &RootedTree, k: u32) -> Result<ReturnProfile> {
    if k < 2 {
        return Err(domain("return_probs", format!("K must be at least 2, got {k}")));
    }
    let radius = k.div_ceil(2);
    check_horizon("return_probs", t, radius)?;
    let probs = Ball::new(t, radius).return_probs(k);
    Ok(ReturnProfile {
        probs,
        k,
        exact_upto: t.exact_return_horizon().unwrap_or(k),
    })
}

/// `Σ_{k=1..K} p_k(o; T) / k`.
pub fn return_sum(t: &RootedTree, k: u32) -> Result<f64> {
    Ok(return_probs(t, k)?.return_sum())
}

/// Truncated generating function with a bound on the dropped tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    /// `Σ_{k=0..K} p_k s^k`.
    pub value: f64,
    /// `s^K / (1 - s)`, at least the omitted tail `Σ_{k>K} p_k s^k`.
    pub error_bound: f64,
}

pub fn green_value(t: &RootedTree, s: f64, k: u32) -> Result<GreenValue> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("green_value", format!("s must lie in (0, 1), got {s}")));
    }
    let prof = return_probs(t, k)?;
    let value = prof.probs.iter().rev().fold(0.0, |acc, p| acc * s + p);
    Ok(GreenValue {
        value,
        error_bound: s.powi(k as i32) / (1.0 - s),
    })
}

/// Uniform neighbour of `v`: index 0 is the parent when there is one.
fn step<T: LazyTree + ?Sized>(t: &mut T, v: NodeId, rng: &mut SmallRng) -> Result<NodeId> {
    t.expand(v)?;
    let tree = t.tree();
    let deg = tree.degree(v);
    let j = rng.random_range(0..deg);
    Ok(match tree.parent(v) {
        Some(p) if j == 0 => p,
        Some(_) => tree.children(v).start + j - 1,
        None => tree.children(v).start + j,
    })
}

/// Visits to the root (counting the start) of a walk that dies before each
/// step with probability `1 - s`; expands the tree as the walk goes.
pub fn killed_walk_visits_lazy<T: LazyTree + ?Sized>(t: &mut T, s: f64, rng: &mut SmallRng) -> Result<u64> {
    let root = t.tree().root();
    let mut v = root;
    let mut visits = 1;
    while rng.random::<f64>() < s {
        v = step(t, v, rng)?;
        if v == root {
            visits += 1;
        }
    }
    Ok(visits)
}

/// Killed walk on a fixed tree, which must be expanded to depth
/// `ceil(ln(1e6) / ln(1/s))` unless it is complete.
pub fn killed_walk_visits(t: &RootedTree, s: f64, seed: u64) -> Result<u64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("killed_walk_visits", format!("s must lie in (0, 1), got {s}")));
    }
    check_horizon("killed_walk_visits", t, killed_walk_guard(s))?;
    let mut rng = rng_from_key(substream(seed, "walk.killed_walk_visits", 0));
    let mut t = t.clone();
    killed_walk_visits_lazy(&mut t, s, &mut rng)
}

/// Empirical tails `P(X >= m)` of killed-walk visit counts on the lower
/// (`X`) and upper (`X'`) trees of coupled PGW*(λ) ⊂ PGW*(μ) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KilledWalkComparison {
    pub lambda: f64,
    pub mu: f64,
    pub s: f64,
    pub runs: u64,
    pub m: Vec<u64>,
    pub tail_lo: Vec<f64>,
    pub tail_hi: Vec<f64>,
    /// Standard error of `tail_lo - tail_hi`, runs being independent.
    pub sigma: Vec<f64>,
}

impl KilledWalkComparison {
    /// Cutoffs at which `P(X >= m) < P(X' >= m) - z σ`.
    pub fn violations(&self, z: f64) -> Vec<u64> {
        (0..self.m.len())
            .filter(|&i| self.tail_lo[i] < self.tail_hi[i] - z * self.sigma[i])
            .map(|i| self.m[i])
            .collect()
    }
}

/// One killed walk on each tree of a fresh coupled pair per run.
pub fn compare_killed_walks(lambda: f64, mu: f64, s: f64, runs: u64, m: &[u64], seed: u64) -> Result<KilledWalkComparison> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("compare_killed_walks", format!("s must lie in (0, 1), got {s}")));
    }
    if runs < 2 {
        return Err(domain("compare_killed_walks", "need at least 2 runs"));
    }
    let counts: Vec<(u64, u64)> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let key = substream(seed, "walk.compare_killed_walks", i);
            let mut pair = CoupledPair::with_key(lambda, mu, key)?;
            let x = killed_walk_visits_lazy(&mut pair.lo_side(), s, &mut rng_from_key(child_key(key, 1 << 50)))?;
            let y = killed_walk_visits_lazy(&mut pair.hi_side(), s, &mut rng_from_key(child_key(key, 2 << 50)))?;
            Ok((x, y))
        })
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let tail = |mm: u64, hi: bool| counts.iter().filter(|(x, y)| if hi { *y >= mm } else { *x >= mm }).count() as f64 / n;
    let tail_lo: Vec<f64> = m.iter().map(|&mm| tail(mm, false)).collect();
    let tail_hi: Vec<f64> = m.iter().map(|&mm| tail(mm, true)).collect();
    let sigma = tail_lo
        .iter()
        .zip(&tail_hi)
        .map(|(a, b)| ((a * (1.0 - a) + b * (1.0 - b)) / n).sqrt())
        .collect();
    Ok(KilledWalkComparison {
        lambda,
        mu,
        s,
        runs,
        m: m.to_vec(),
        tail_lo,
        tail_hi,
        sigma,
    })
}

/// Unbiased estimates of `p_1..p_K` (index `k`) for one PGW*(c) tree.
///
/// `p_k` is exact for `k <= 2r`, `r` the largest radius whose ball fits the
/// node budget (at most `K/2`); beyond that a single walk of length `K`
/// contributes the indicator of being at the root. Growing `K` with the same
/// key only adds nonnegative terms.
pub(crate) fn sample_return_terms(c: f64, k: u32, key: u64) -> Result<Vec<f64>> {
    let mut t = PgwStarTree::with_key(c, key)?;
    let half = k / 2;
    let mut r = 1;
    t.materialize(1)?;
    // Nodes at depth r + 1 exist once depth r is expanded.
    while r < half && t.tree().ball_size(r + 1) <= BALL_BUDGET {
        r += 1;
        t.materialize(r)?;
    }
    let mut terms = Ball::new(t.tree(), r).return_probs(k.min(2 * r));
    terms.resize(k as usize + 1, 0.0);
    if 2 * r < k {
        let mut rng = rng_from_key(child_key(key, 1 << 50));
        let root = t.tree().root();
        let mut v = root;
        for step_no in 1..=k {
            v = step(&mut t, v, &mut rng)?;
            let d = t.tree().depth(v);
            if d > k - step_no {
                break;
            }
            if v == root && step_no > 2 * r {
                terms[step_no as usize] = 1.0;
            }
        }
    }
    Ok(terms)
}

fn validate_mc(op: &'static str, c: f64, k: u32, n_samples: u64) -> Result<()> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(domain(op, format!("need c > 1, got {c}")));
    }
    if k < 20 || k % 2 != 0 {
        return Err(domain(op, format!("K must be even and at least 20, got {k}")));
    }
    if n_samples < 2 {
        return Err(domain(op, format!("need at least 2 samples, got {n_samples}")));
    }
    Ok(())
}

fn per_sample<T: Send>(n: u64, seed: u64, name: &str, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(|i| f(substream(seed, name, i))).collect()
}

/// Monte Carlo estimate of `E Σ_{k=1..K} p_k(o; T) / k` over T ~ PGW*(c).
pub fn estimate_return_integral(c: f64, k: u32, n_samples: u64, seed: u64) -> Result<EstimateReport> {
    validate_mc("estimate_return_integral", c, k, n_samples)?;
    let start = Instant::now();
    let sums = per_sample(n_samples, seed, "walk.estimate_return_integral", |key| {
        let t = sample_return_terms(c, k, key)?;
        Ok(t.iter().enumerate().skip(1).map(|(j, p)| p / j as f64).sum::<f64>())
    })?;
    let trunc = Truncation {
        k: Some(k),
        depth: Some(k / 2),
        graph_n: None,
    };
    Ok(EstimateReport::from_samples("return_integral", c, &sums, trunc, seed, start.elapsed()))
}

/// `f(c) ≈ E[ln deg(o)] - E Σ_{k<=K} p_k/k`, the first term exact.
/// Truncating at `K` drops positive terms, so this is biased upward.
pub fn estimate_f(c: f64, k: u32, n_samples: u64, seed: u64) -> Result<EstimateReport> {
    validate_mc("estimate_f", c, k, n_samples)?;
    let log_deg = f_bounds(&GWParams::new(c)?, 1).f_upper;
    let mut r = estimate_return_integral(c, k, n_samples, seed)?;
    r.estimator = "walk_f".into();
    r.value = log_deg - r.value;
    Ok(r)
}

/// Per-`k` estimates of `p̄_k(c) = E p_k(o; T)` with a least-squares fit
/// of `ln p̄_k` against `k^{1/6}` over even `k` with positive estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub c: f64,
    pub k: u32,
    pub n_samples: u64,
    pub seed: u64,
    /// `(k, mean, stderr)` for `1 <= k <= K`.
    pub rows: Vec<(u32, f64, f64)>,
    pub fit_intercept: f64,
    pub fit_slope: f64,
}

pub fn pbar_decay_diagnostic(c: f64, k: u32, n_samples: u64, seed: u64) -> Result<DecayTable> {
    validate_mc("pbar_decay_diagnostic", c, k, n_samples)?;
    let samples = per_sample(n_samples, seed, "walk.pbar_decay_diagnostic", |key| sample_return_terms(c, k, key))?;
    let rows: Vec<(u32, f64, f64)> = (1..=k)
        .map(|j| {
            let col: Vec<f64> = samples.iter().map(|s| s[j as usize]).collect();
            let (m, se) = crate::dist::mean_stderr(&col);
            (j, m, se)
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(j, m, _)| j % 2 == 0 && *m > 0.0)
        .map(|&(j, m, _)| ((j as f64).powf(1.0 / 6.0), m.ln()))
        .collect();
    let (fit_intercept, fit_slope) = least_squares(&pts);
    Ok(DecayTable {
        c,
        k,
        n_samples,
        seed,
        rows,
        fit_intercept,
        fit_slope,
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
