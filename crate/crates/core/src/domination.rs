//! Stochastic domination between conditioned Poisson laws and between
//! PGW*(λ) and PGW*(μ).
//!
//! For `μ > λ > 0` a zero-truncated Poisson(μ) variable dominates the sum of
//! independent zero-truncated Poisson(λ) and Poisson(β) variables exactly
//! when `β <= α(λ, μ)`. [`verify_tail_domination`] checks the tail
//! inequalities for a given β, [`DominatedOffspring`] realises the monotone
//! coupling, and [`CoupledPair`] applies it at every vertex to grow PGW*(λ)
//! inside PGW*(μ).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::rngs::SmallRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{alpha, GWParams};
use crate::dist::{ln_factorial, poisson, zt_poisson};
use crate::error::{domain, Error, Result};
use crate::rng::{child_key, rng_from_key, substream};
use crate::trees::{
    keyed_finite_counts, sample_finite_counts, subtree_sizes, LazyTree, NodeId, NodeType, Offspring, RootedTree,
    StarLaw, SubtreeSize, FINITE_SUBTREE_CAP,
};

/// Tables are extended until both pmfs fall below this.
const TABLE_FLOOR: f64 = 1e-30;

/// `b_k = P(Q*_μ = k) = μ^k / ((e^μ - 1) k!)`.
pub fn qstar_pmf(mu: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    (k as f64 * mu.ln() - ln_factorial(k) - mu - (-(-mu).exp_m1()).ln()).exp()
}

/// `a_k = P(Q*_λ + Q_β = k) = e^{-β} ((λ+β)^k - β^k) / ((e^λ - 1) k!)`.
pub fn conv_pmf(lambda: f64, beta: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(domain("conv_pmf", "the sum is at least 1"));
    }
    if !(lambda > 0.0 && lambda.is_finite() && beta >= 0.0 && beta.is_finite()) {
        return Err(domain("conv_pmf", format!("need lambda > 0 and beta >= 0, got {lambda}, {beta}")));
    }
    Ok(conv_pmf_unchecked(lambda, beta, k))
}

fn conv_pmf_unchecked(lambda: f64, beta: f64, k: u64) -> f64 {
    let kf = k as f64;
    let s = lambda + beta;
    // ln((λ+β)^k - β^k) = k ln(λ+β) + ln(1 - (β/(λ+β))^k)
    let correction = if beta == 0.0 {
        0.0
    } else {
        (-(kf * (beta / s).ln()).exp_m1()).ln()
    };
    // e^{-β}/(e^λ - 1) = exp(-β - λ - ln(1 - e^{-λ}))
    let ln_norm = -beta - lambda - (-(-lambda).exp_m1()).ln();
    (kf * s.ln() + correction - ln_factorial(k) + ln_norm).exp()
}

/// Outcome of the tail comparison between `Z = Q*_λ + Q_β` and `Q*_μ`.
///
/// `min_margin` is the minimum over cutoffs `1 <= m <= kmax` of
/// `P(Q*_μ > m) - P(Z > m)`, i.e. of `Σ_{j>m} b_j - Σ_{j>m} a_j`.
/// `violated_at` is the first cutoff where the margin is below
/// `-ε·kmax`, ε the machine epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub lambda: f64,
    pub mu: f64,
    pub beta: f64,
    pub kmax: u64,
    pub min_margin: f64,
    pub violated_at: Option<u64>,
}

/// Tails `Σ_{j>=k}` of the pmfs of `Z` and `Q*_μ`, summed back to front
/// from where both are negligible.
#[derive(Debug, Clone)]
struct PairTables {
    tail_a: Vec<f64>,
    tail_b: Vec<f64>,
}

impl PairTables {
    fn new(lambda: f64, mu: f64, beta: f64, min_len: u64) -> Self {
        let mut a = vec![0.0];
        let mut b = vec![0.0];
        let mut k = 1u64;
        let mode = (lambda + beta).max(mu);
        loop {
            let ak = conv_pmf_unchecked(lambda, beta, k);
            let bk = qstar_pmf(mu, k);
            a.push(ak);
            b.push(bk);
            if k > min_len && k as f64 > mode && ak < TABLE_FLOOR && bk < TABLE_FLOOR {
                break;
            }
            k += 1;
        }
        let tail = |p: &[f64]| {
            let mut t = vec![0.0; p.len() + 1];
            for i in (0..p.len()).rev() {
                t[i] = t[i + 1] + p[i];
            }
            t
        };
        Self {
            tail_a: tail(&a),
            tail_b: tail(&b),
        }
    }

    /// `P(X <= k) = 1 - P(X > k)` from the back-summed tail.
    fn cdf(tail: &[f64], k: usize) -> f64 {
        1.0 - tail[(k + 1).min(tail.len() - 1)]
    }
}

/// Check `P(Q*_μ > m) >= P(Q*_λ + Q_β > m)` for all cutoffs `m <= kmax`.
pub fn verify_tail_domination(lambda: f64, mu: f64, beta: f64, kmax: u64) -> Result<TailReport> {
    const OP: &str = "verify_tail_domination";
    if !(lambda > 0.0 && mu > lambda && mu.is_finite()) {
        return Err(domain(OP, format!("need mu > lambda > 0, got {lambda}, {mu}")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(domain(OP, format!("need beta >= 0, got {beta}")));
    }
    if kmax < 1 {
        return Err(domain(OP, "kmax must be positive"));
    }
    let t = PairTables::new(lambda, mu, beta, kmax + 1);
    let tol = f64::EPSILON * kmax as f64;
    let mut min_margin = f64::INFINITY;
    let mut violated_at = None;
    for m in 1..=kmax as usize {
        let margin = t.tail_b[m + 1] - t.tail_a[m + 1];
        min_margin = min_margin.min(margin);
        if violated_at.is_none() && margin < -tol {
            violated_at = Some(m as u64);
        }
    }
    Ok(TailReport {
        lambda,
        mu,
        beta,
        kmax,
        min_margin,
        violated_at,
    })
}

/// Monotone (quantile) coupling of `lo = Q*_λ + Q_β` below `hi = Q*_μ`,
/// valid when `β <= α(λ, μ)`.
#[derive(Debug, Clone)]
pub struct DominatedOffspring {
    lo_cdf: Vec<f64>,
    hi_cdf: Vec<f64>,
}

impl DominatedOffspring {
    pub fn new(lambda: f64, mu: f64, beta: f64) -> Result<Self> {
        let a = alpha(lambda, mu)?;
        if !(beta >= 0.0) || beta > a * (1.0 + 1e-12) {
            return Err(domain(
                "DominatedOffspring",
                format!("beta = {beta} exceeds alpha(lambda, mu) = {a}; no monotone coupling exists"),
            ));
        }
        let t = PairTables::new(lambda, mu, beta, 1);
        let n = t.tail_a.len() - 1;
        Ok(Self {
            lo_cdf: (0..n).map(|k| PairTables::cdf(&t.tail_a, k)).collect(),
            hi_cdf: (0..n).map(|k| PairTables::cdf(&t.tail_b, k)).collect(),
        })
    }

    fn quantile(cdf: &[f64], u: f64) -> u64 {
        // First k with cdf[k] > u; cdf[0] = 0.
        let k = cdf.partition_point(|&f| f <= u);
        k.min(cdf.len() - 1).max(1) as u64
    }

    /// Joint draw `(lo, hi)` with `hi >= lo`.
    pub fn sample(&self, rng: &mut SmallRng) -> (u64, u64) {
        let u: f64 = rng.random();
        let lo = Self::quantile(&self.lo_cdf, u);
        // The max only matters when rounding makes the two cdfs cross.
        (lo, Self::quantile(&self.hi_cdf, u).max(lo))
    }

    /// Draw `hi` from its conditional law given `lo`: a uniform point of
    /// the cdf cell of `lo` pushed through the quantile function of `hi`.
    pub fn hi_given_lo(&self, lo: u64, rng: &mut SmallRng) -> u64 {
        let k = (lo as usize).min(self.lo_cdf.len() - 1);
        let (f0, f1) = (self.lo_cdf[k - 1], self.lo_cdf[k]);
        let u = f0 + (f1 - f0) * rng.random::<f64>();
        Self::quantile(&self.hi_cdf, u).max(lo)
    }
}

/// One draw of the monotone coupling with `β = α(λ, μ)`.
pub fn sample_dominated_offspring(lambda: f64, mu: f64, seed: u64) -> Result<(u64, u64)> {
    let d = DominatedOffspring::new(lambda, mu, alpha(lambda, mu)?)?;
    let mut rng = rng_from_key(substream(seed, "domination.sample_dominated_offspring", 0));
    Ok(d.sample(&mut rng))
}

/// `T ≤₁ T'` at the roots: the children of the root of `lo` inject into the
/// children of the root of `hi` with `N(i(v)) >= N(v)`.
pub fn check_le1(lo: &RootedTree, hi: &RootedTree) -> bool {
    check_le1_at(lo, &subtree_sizes(lo), lo.root(), hi, &subtree_sizes(hi), hi.root())
}

/// `≤₁` between the subtrees rooted at `v` in `lo` and `w` in `hi`, given
/// precomputed subtree sizes. Matching the sorted child sizes rank by rank is
/// exact for threshold constraints of this form.
pub fn check_le1_at(
    lo: &RootedTree,
    lo_sizes: &[SubtreeSize],
    v: NodeId,
    hi: &RootedTree,
    hi_sizes: &[SubtreeSize],
    w: NodeId,
) -> bool {
    let mut a: Vec<SubtreeSize> = lo.children(v).map(|x| lo_sizes[x]).collect();
    let mut b: Vec<SubtreeSize> = hi.children(w).map(|x| hi_sizes[x]).collect();
    if a.len() > b.len() {
        return false;
    }
    a.sort_unstable_by(|x, y| y.cmp(x));
    b.sort_unstable_by(|x, y| y.cmp(x));
    a.iter().zip(&b).all(|(x, y)| x <= y)
}

/// Root-level decomposition of a coupled pair: the lower tree has
/// `shared_k + extra_k` finite children of size `k` and the upper tree
/// `shared_k`; `n_inf_hi >= n_inf_lo + Σ extra_k`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffspringCouple {
    pub shared: BTreeMap<u64, u64>,
    pub extra: BTreeMap<u64, u64>,
    pub n_inf_lo: u64,
    pub n_inf_hi: u64,
}

impl OffspringCouple {
    pub fn n_fin_lo(&self) -> BTreeMap<u64, u64> {
        let mut m = self.shared.clone();
        for (k, n) in &self.extra {
            *m.entry(*k).or_insert(0) += n;
        }
        m
    }

    pub fn n_fin_hi(&self) -> &BTreeMap<u64, u64> {
        &self.shared
    }

    pub fn extra_total(&self) -> u64 {
        self.extra.values().sum()
    }
}

const TAG_SHARED: u64 = 1 << 40;
const TAG_EXTRA: u64 = 2 << 40;
const TAG_INF: u64 = 3 << 40;
const TAG_FRESH: u64 = 4 << 40;
const TAG_GRAFT: u64 = 5 << 40;
const MAX_EXTRA_ATTEMPTS: u64 = 100_000;

#[derive(Debug, Clone, Copy)]
enum HiPending {
    Coupled(NodeId),
    Fresh(u64),
}

/// Per-vertex laws of the coupling.
#[derive(Debug, Clone)]
struct CouplingLaw {
    lambda: f64,
    mu: f64,
    lo: GWParams,
    hi: GWParams,
    shared: Offspring,
    extra_mean: f64,
    lo_finite: Offspring,
    /// `(μ e^{-μ}) / (λ e^{-λ})`: an extra subtree of size k is accepted
    /// with probability `1 - ratio^k`.
    size_ratio: f64,
    infinite: DominatedOffspring,
    hi_star: StarLaw,
}

impl CouplingLaw {
    fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 1.0 && mu > lambda && mu.is_finite()) {
            return Err(domain("sample_coupled_trees", format!("need mu > lambda > 1, got {lambda}, {mu}")));
        }
        let lo = GWParams::new(lambda)?;
        let hi = GWParams::new(mu)?;
        // Mean number of finite children the lower tree has beyond the shared ones.
        let extra_mean = lo.dual() - hi.dual();
        Ok(Self {
            lambda,
            mu,
            shared: Offspring::new(hi.dual()),
            extra_mean,
            lo_finite: Offspring::new(lo.dual()),
            size_ratio: ((mu / lambda).ln() + lambda - mu).exp(),
            infinite: DominatedOffspring::new(lo.survival_rate(), hi.survival_rate(), extra_mean)?,
            hi_star: StarLaw::new(mu)?,
            lo,
            hi,
        })
    }
}

/// PGW*(λ) grown inside PGW*(μ), `1 < λ < μ`, with the root-preserving
/// embedding of the lower tree into the upper one.
///
/// At each coupled vertex the finite children split into `Z_k` shared
/// subtrees of size `k` (Poisson with the PGW(μ) intensity) and `Z'_k`
/// extra subtrees of the lower tree (Poisson with the difference of the
/// intensities). The counts of infinite children are coupled so that the
/// upper tree has at least as many as the lower tree's infinite children
/// plus its extra finite ones. Infinite children are paired and coupled
/// recursively; each extra finite subtree is mapped into an infinite child of
/// the upper tree grown around it.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    law: CouplingLaw,
    lo: RootedTree,
    hi: RootedTree,
    embedding: Vec<NodeId>,
    lo_pending: BTreeMap<NodeId, (NodeId, u64)>,
    hi_pending: BTreeMap<NodeId, HiPending>,
    root_couple: OffspringCouple,
    extra_rejections: u64,
}

impl CoupledPair {
    /// Pair with both roots expanded.
    pub fn new(lambda: f64, mu: f64, seed: u64) -> Result<Self> {
        Self::with_key(lambda, mu, substream(seed, "domination.sample_coupled_trees", 0))
    }

    pub(crate) fn with_key(lambda: f64, mu: f64, key: u64) -> Result<Self> {
        let mut p = Self {
            law: CouplingLaw::new(lambda, mu)?,
            lo: RootedTree::new_root(NodeType::Infinite),
            hi: RootedTree::new_root(NodeType::Infinite),
            embedding: vec![0],
            lo_pending: BTreeMap::from([(0, (0, key))]),
            hi_pending: BTreeMap::from([(0, HiPending::Coupled(0))]),
            root_couple: OffspringCouple::default(),
            extra_rejections: 0,
        };
        p.root_couple = p.expand_pair(0)?;
        Ok(p)
    }

    pub fn lambda(&self) -> f64 {
        self.law.lambda
    }

    pub fn mu(&self) -> f64 {
        self.law.mu
    }

    pub fn lo(&self) -> &RootedTree {
        &self.lo
    }

    pub fn hi(&self) -> &RootedTree {
        &self.hi
    }

    /// Image in the upper tree of each node of the lower tree.
    pub fn embedding(&self) -> &[NodeId] {
        &self.embedding
    }

    pub fn root_couple(&self) -> &OffspringCouple {
        &self.root_couple
    }

    /// Proposals of extra finite subtrees that were rejected for their size.
    pub fn extra_rejections(&self) -> u64 {
        self.extra_rejections
    }

    pub fn lo_side(&mut self) -> CoupledSide<'_> {
        CoupledSide { pair: self, upper: false }
    }

    pub fn hi_side(&mut self) -> CoupledSide<'_> {
        CoupledSide { pair: self, upper: true }
    }

    /// Expand every pending node at depth `<= depth` in both trees.
    pub fn materialize(&mut self, depth: u32) -> Result<()> {
        loop {
            let lo: Vec<NodeId> = self
                .lo_pending
                .keys()
                .copied()
                .filter(|&v| self.lo.depth(v) <= depth)
                .collect();
            let hi: Vec<NodeId> = self
                .hi_pending
                .keys()
                .copied()
                .filter(|&v| self.hi.depth(v) <= depth)
                .collect();
            if lo.is_empty() && hi.is_empty() {
                break;
            }
            for v in lo {
                self.expand_lo(v)?;
            }
            for w in hi {
                self.expand_hi(w)?;
            }
        }
        self.lo.set_truncation_depth(depth);
        self.hi.set_truncation_depth(depth);
        Ok(())
    }

    fn expand_lo(&mut self, v: NodeId) -> Result<()> {
        if self.lo.is_expanded(v) {
            return Ok(());
        }
        if !self.lo_pending.contains_key(&v) {
            return Err(Error::BeyondHorizon {
                node: v,
                depth: self.lo.depth(v),
            });
        }
        self.expand_pair(v).map(|_| ())
    }

    fn expand_hi(&mut self, w: NodeId) -> Result<()> {
        if self.hi.is_expanded(w) {
            return Ok(());
        }
        match self.hi_pending.get(&w).copied() {
            Some(HiPending::Coupled(v)) => self.expand_pair(v).map(|_| ()),
            Some(HiPending::Fresh(key)) => {
                self.hi_pending.remove(&w);
                let inf = self.law.hi_star.expand_infinite(&mut self.hi, w, key)?;
                for (j, x) in inf.enumerate() {
                    self.hi_pending.insert(x, HiPending::Fresh(child_key(key, j as u64)));
                }
                Ok(())
            }
            None => Err(Error::BeyondHorizon {
                node: w,
                depth: self.hi.depth(w),
            }),
        }
    }

    /// Draw an extra finite subtree for the lower tree: a PGW(λ q(λ)) tree
    /// accepted with probability `1 - ratio^size`, so that sizes follow the
    /// difference of the two finite-subtree intensities.
    fn draw_extra(&mut self, key: u64) -> Result<Vec<u32>> {
        for attempt in 0..MAX_EXTRA_ATTEMPTS {
            let mut rng = rng_from_key(child_key(key, attempt));
            let Some(counts) = sample_finite_counts(&mut rng, self.law.lo_finite, FINITE_SUBTREE_CAP) else {
                self.lo.add_rejections(1);
                continue;
            };
            let accept = 1.0 - self.law.size_ratio.powi(counts.len() as i32);
            if rng.random::<f64>() < accept {
                return Ok(counts);
            }
            self.extra_rejections += 1;
        }
        Err(domain("sample_coupled_trees", "extra finite subtree rejection did not terminate"))
    }

    fn expand_pair(&mut self, v: NodeId) -> Result<OffspringCouple> {
        let (w, key) = self.lo_pending.remove(&v).expect("pending coupled node");
        self.hi_pending.remove(&w);
        let law = &self.law;
        let mut rng = rng_from_key(key);
        let z = poisson(&mut rng, law.hi.dual()) as usize;
        let zp = poisson(&mut rng, law.extra_mean) as usize;
        let n_inf_lo = zt_poisson(&mut rng, law.lo.survival_rate()) as usize;
        let n_inf_hi = law.infinite.hi_given_lo((n_inf_lo + zp) as u64, &mut rng) as usize;
        let shared_off = law.shared;

        let mut couple = OffspringCouple {
            n_inf_lo: n_inf_lo as u64,
            n_inf_hi: n_inf_hi as u64,
            ..Default::default()
        };

        let mut lo_kinds = vec![NodeType::Finite; z + zp];
        lo_kinds.extend(std::iter::repeat_n(NodeType::Infinite, n_inf_lo));
        let mut hi_kinds = vec![NodeType::Finite; z];
        hi_kinds.extend(std::iter::repeat_n(NodeType::Infinite, n_inf_hi));
        let lo_kids: Vec<NodeId> = self.lo.push_children(v, &lo_kinds).collect();
        let hi_kids: Vec<NodeId> = self.hi.push_children(w, &hi_kinds).collect();
        self.embedding.extend(hi_kids.iter().take(lo_kids.len()).copied());

        for j in 0..z {
            let (counts, redraws) = keyed_finite_counts(child_key(key, TAG_SHARED + j as u64), shared_off, FINITE_SUBTREE_CAP)?;
            self.lo.add_rejections(redraws);
            *couple.shared.entry(counts.len() as u64).or_insert(0) += 1;
            let lo_ids = self.lo.append_bfs_subtree(lo_kids[j], &counts, NodeType::Finite);
            let hi_ids = self.hi.append_bfs_subtree(hi_kids[j], &counts, NodeType::Finite);
            self.record_images(&lo_ids, &hi_ids);
        }
        for j in 0..zp {
            let counts = self.draw_extra(child_key(key, TAG_EXTRA + j as u64))?;
            *couple.extra.entry(counts.len() as u64).or_insert(0) += 1;
            let lo_ids = self.lo.append_bfs_subtree(lo_kids[z + j], &counts, NodeType::Finite);
            let hi_ids = self.graft(hi_kids[z + j], &counts, child_key(key, TAG_GRAFT + j as u64))?;
            self.record_images(&lo_ids, &hi_ids);
        }
        for j in 0..n_inf_lo {
            let (lv, hv) = (lo_kids[z + zp + j], hi_kids[z + zp + j]);
            self.lo_pending.insert(lv, (hv, child_key(key, TAG_INF + j as u64)));
            self.hi_pending.insert(hv, HiPending::Coupled(lv));
        }
        for (j, &hv) in hi_kids[z + zp + n_inf_lo..].iter().enumerate() {
            self.hi_pending.insert(hv, HiPending::Fresh(child_key(key, TAG_FRESH + j as u64)));
        }
        Ok(couple)
    }

    fn record_images(&mut self, lo_ids: &[NodeId], hi_ids: &[NodeId]) {
        for (&l, &h) in lo_ids.iter().zip(hi_ids).skip(1) {
            debug_assert_eq!(l, self.embedding.len());
            self.embedding.push(h);
        }
    }

    /// Grow an infinite subtree of the upper tree around the finite subtree
    /// with breadth-first `counts`, rooted at the pending node `root`.
    ///
    /// Every vertex of the finite subtree gets Poisson((μ-λ) q(μ)) further
    /// finite children and, in total over the subtree, a zero-truncated
    /// Poisson((μ-λ) θ(μ) |S|) number of further infinite children placed on
    /// uniformly chosen vertices. This is PGW(μ) conditioned to survive and
    /// to have the given subtree as its λ/μ-percolation cluster.
    fn graft(&mut self, root: NodeId, counts: &[u32], key: u64) -> Result<Vec<NodeId>> {
        let law = &self.law;
        let m = counts.len();
        let gap = law.mu - law.lambda;
        let mut rng = rng_from_key(key);
        let n_inf = zt_poisson(&mut rng, gap * law.hi.theta * m as f64);
        let mut inf_at = vec![0u32; m];
        for _ in 0..n_inf {
            inf_at[rng.random_range(0..m)] += 1;
        }
        let fin_off = Offspring::new(gap * law.hi.q);
        let fin_at: Vec<u32> = (0..m).map(|_| fin_off.sample(&mut rng)).collect();

        // Parent index (in BFS order) of every vertex of the finite subtree.
        let mut first_child = vec![0usize; m];
        let mut next = 1;
        for i in 0..m {
            first_child[i] = next;
            next += counts[i] as usize;
        }
        let mut reaches_inf = vec![false; m];
        for i in (0..m).rev() {
            let kids = first_child[i]..first_child[i] + counts[i] as usize;
            reaches_inf[i] = inf_at[i] > 0 || kids.into_iter().any(|c| reaches_inf[c]);
        }
        debug_assert!(reaches_inf[0]);

        let mut ids = vec![root; m];
        let mut fin_roots = Vec::new();
        let mut inf_nodes = Vec::new();
        for i in 0..m {
            let kids = first_child[i]..first_child[i] + counts[i] as usize;
            let mut kinds: Vec<NodeType> = kids
                .clone()
                .map(|c| if reaches_inf[c] { NodeType::Infinite } else { NodeType::Finite })
                .collect();
            kinds.extend(std::iter::repeat_n(NodeType::Finite, fin_at[i] as usize));
            kinds.extend(std::iter::repeat_n(NodeType::Infinite, inf_at[i] as usize));
            let r: Vec<NodeId> = self.hi.push_children(ids[i], &kinds).collect();
            for (c, &id) in kids.zip(&r) {
                ids[c] = id;
            }
            let s = counts[i] as usize;
            fin_roots.extend_from_slice(&r[s..s + fin_at[i] as usize]);
            inf_nodes.extend_from_slice(&r[s + fin_at[i] as usize..]);
        }
        let hi_fin = Offspring::new(self.law.hi.dual());
        for (j, &f) in fin_roots.iter().enumerate() {
            let (c, redraws) = keyed_finite_counts(child_key(key, TAG_SHARED + j as u64), hi_fin, FINITE_SUBTREE_CAP)?;
            self.hi.add_rejections(redraws);
            self.hi.append_bfs_subtree(f, &c, NodeType::Finite);
        }
        for (j, &x) in inf_nodes.iter().enumerate() {
            self.hi_pending.insert(x, HiPending::Fresh(child_key(key, TAG_FRESH + j as u64)));
        }
        Ok(ids)
    }

    /// Root maps to root, parents map to parents, and the map is injective.
    pub fn validate_embedding(&self) -> std::result::Result<(), String> {
        if self.embedding.len() != self.lo.len() {
            return Err(format!("{} images for {} nodes", self.embedding.len(), self.lo.len()));
        }
        if self.embedding[0] != self.hi.root() {
            return Err("root is not mapped to root".into());
        }
        let mut used = vec![false; self.hi.len()];
        for (v, &img) in self.embedding.iter().enumerate() {
            if img >= self.hi.len() || std::mem::replace(&mut used[img], true) {
                return Err(format!("node {v} has an invalid or repeated image"));
            }
            if let Some(p) = self.lo.parent(v) {
                if self.hi.parent(img) != Some(self.embedding[p]) {
                    return Err(format!("parent of image of {v} is not the image of its parent"));
                }
            }
            if self.lo.kind(v) == NodeType::Infinite && self.hi.kind(img) != NodeType::Infinite {
                return Err(format!("infinite node {v} mapped to a finite node"));
            }
        }
        Ok(())
    }

    /// `≤₁` at every expanded node of the lower tree against its image.
    pub fn check_le1_everywhere(&self) -> bool {
        let ls = subtree_sizes(&self.lo);
        let hs = subtree_sizes(&self.hi);
        (0..self.lo.len())
            .filter(|&v| self.lo.is_expanded(v))
            .all(|v| check_le1_at(&self.lo, &ls, v, &self.hi, &hs, self.embedding[v]))
    }

    /// Both trees in the adjacency text format, separated by a header line,
    /// followed by the embedding as `lo_id hi_id` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# lower\n");
        s.push_str(&self.lo.to_adjacency_text());
        s.push_str("# upper\n");
        s.push_str(&self.hi.to_adjacency_text());
        s.push_str("# embedding\n");
        for (v, w) in self.embedding.iter().enumerate() {
            let _ = writeln!(s, "{v} {w}");
        }
        s
    }
}

/// One tree of a [`CoupledPair`], expandable on demand.
pub struct CoupledSide<'a> {
    pair: &'a mut CoupledPair,
    upper: bool,
}

impl LazyTree for CoupledSide<'_> {
    fn tree(&self) -> &RootedTree {
        if self.upper {
            &self.pair.hi
        } else {
            &self.pair.lo
        }
    }

    fn expand(&mut self, v: NodeId) -> Result<()> {
        if self.upper {
            self.pair.expand_hi(v)
        } else {
            self.pair.expand_lo(v)
        }
    }
}

/// PGW*(λ) inside PGW*(μ), both materialized to `depth`.
pub fn sample_coupled_trees(lambda: f64, mu: f64, depth: u32, seed: u64) -> Result<CoupledPair> {
    if depth == 0 {
        return Err(domain("sample_coupled_trees", "depth must be at least 1"));
    }
    let mut p = CoupledPair::new(lambda, mu, seed)?;
    p.materialize(depth)?;
    Ok(p)
}
