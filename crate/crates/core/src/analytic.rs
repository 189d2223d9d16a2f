//! Closed-form scalar quantities of the Poisson Galton-Watson model.
//!
//! Extinction probability and its dual, the Borel law of total progeny,
//! the root-degree law of the tree conditioned to survive, and the bounds on
//! the spanning-tree entropy `f(c)` and its derivative that follow from it.

use serde::{Deserialize, Serialize};

use crate::dist::ln_factorial;
use crate::error::{domain, Result};

/// Default residual tolerance for [`extinction_prob`].
pub const DEFAULT_TOL: f64 = 1e-12;

/// Below this distance from criticality the fixed-point iteration is too
/// slow and the solver bisects instead.
const BISECTION_BAND: f64 = 0.05;

const SERIES_EPS: f64 = 1e-12;

/// Branching parameter of a supercritical Poisson Galton-Watson tree together
/// with its extinction and survival probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GWParams {
    pub c: f64,
    /// Extinction probability, the smallest root of `q = exp(-c (1 - q))`.
    pub q: f64,
    /// Survival probability `1 - q`.
    pub theta: f64,
}

impl GWParams {
    /// Solve with [`DEFAULT_TOL`].
    pub fn new(c: f64) -> Result<Self> {
        extinction_prob(c, DEFAULT_TOL)
    }

    /// Fixed-point residual `|q - exp(-c (1 - q))|`.
    pub fn residual(&self) -> f64 {
        (self.q - (-self.c * self.theta).exp()).abs()
    }

    /// `|c e^{-c} - c q e^{-c q}|`; zero for the exact root since `c q(c)` is
    /// the other preimage of `c e^{-c}` under `x e^{-x}`.
    pub fn duality_residual(&self) -> f64 {
        let cq = self.c * self.q;
        (self.c * (-self.c).exp() - cq * (-cq).exp()).abs()
    }

    /// Mean of the Poisson number of finite (type F) children, `c q`.
    pub fn dual(&self) -> f64 {
        self.c * self.q
    }

    /// Parameter `c θ` of the zero-truncated Poisson number of infinite
    /// (type I) children.
    pub fn survival_rate(&self) -> f64 {
        self.c * self.theta
    }
}

#[inline]
fn fixed_point_gap(c: f64, q: f64) -> f64 {
    q - (-c * (1.0 - q)).exp()
}

/// Extinction probability of PGW(`c`) for `c > 1`.
///
/// Iterates `q <- exp(-c (1 - q))` upward from 0 with Aitken extrapolation.
/// An extrapolated point is kept only if it still lies below the root, so the
/// iterates increase monotonically to the smallest root. Within 0.05 of
/// criticality it bisects on `[0, 1/c]`, which brackets the smallest root
/// because `c q(c) < 1`.
pub fn extinction_prob(c: f64, tol: f64) -> Result<GWParams> {
    const OP: &str = "extinction_prob";
    if !c.is_finite() || c <= 1.0 {
        return Err(domain(OP, format!("need finite c > 1, got {c}")));
    }
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(domain(OP, format!("tolerance must lie in (0, 1e-6], got {tol}")));
    }
    let q = if c - 1.0 < BISECTION_BAND {
        bisect_extinction(c, tol)
    } else {
        iterate_extinction(c, tol).unwrap_or_else(|| bisect_extinction(c, tol))
    };
    Ok(GWParams {
        c,
        q,
        theta: 1.0 - q,
    })
}

fn iterate_extinction(c: f64, tol: f64) -> Option<f64> {
    let phi = |q: f64| (-c * (1.0 - q)).exp();
    let mut q = 0.0;
    for _ in 0..10_000 {
        if fixed_point_gap(c, q).abs() <= tol {
            return Some(q);
        }
        let q1 = phi(q);
        let q2 = phi(q1);
        let denom = q2 - 2.0 * q1 + q;
        let mut next = q2;
        if denom != 0.0 {
            let acc = q - (q1 - q) * (q1 - q) / denom;
            // The gap is negative exactly on [0, q*).
            if acc.is_finite() && acc > q2 && acc < 1.0 / c && fixed_point_gap(c, acc) <= 0.0 {
                next = acc;
            }
        }
        if next <= q {
            // Stalled in floating point.
            return (fixed_point_gap(c, q).abs() <= tol).then_some(q);
        }
        q = next;
    }
    None
}

fn bisect_extinction(c: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0 / c);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let g = fixed_point_gap(c, mid);
        if g.abs() <= tol * 1e-3 || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// `ln((e^x - 1) / x)` for `x > 0`, stable for small and large `x`.
pub(crate) fn ln_expm1_over_x(x: f64) -> f64 {
    if x < 1.0 {
        (x.exp_m1() / x).ln()
    } else {
        x + (-(-x).exp_m1()).ln() - x.ln()
    }
}

/// `α(λ, μ) = ln((e^μ - 1)/μ) - ln((e^λ - 1)/λ)`, the largest Poisson mean
/// that can be added to a zero-truncated Poisson(λ) variable while it stays
/// dominated by a zero-truncated Poisson(μ) variable.
pub fn alpha(lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite() && mu.is_finite()) || mu <= lambda {
        return Err(domain(
            "alpha",
            format!("need mu > lambda > 0, got lambda = {lambda}, mu = {mu}"),
        ));
    }
    Ok(ln_expm1_over_x(mu) - ln_expm1_over_x(lambda))
}

/// Borel(λ) pmf, the law of the total progeny of PGW(λ):
/// `(λ e^{-λ})^k k^{k-1} / (λ k!)`.
///
/// For `λ > 1` the masses are those of the finite part of the progeny and
/// sum to `q(λ)` rather than 1.
pub fn borel_pmf(lambda: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(domain("borel_pmf", "total progeny is at least 1"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain("borel_pmf", format!("need lambda > 0, got {lambda}")));
    }
    Ok(ln_borel_pmf(lambda, k).exp())
}

pub(crate) fn ln_borel_pmf(lambda: f64, k: u64) -> f64 {
    let kf = k as f64;
    kf * (lambda.ln() - lambda) + (kf - 1.0) * kf.ln() - lambda.ln() - ln_factorial(k)
}

/// Expected number of root children of PGW(λ) whose subtree has exactly `k`
/// vertices: `(λ e^{-λ})^k k^{k-1} / k!`.
pub fn finite_subtree_intensity(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    (lambda.ln() + ln_borel_pmf(lambda, k)).exp()
}

/// Root-degree law of PGW*(c): `r_k = e^{-c} c^k (1 - q^k) / (θ k!)`.
/// Zero at `k = 0`.
pub fn degree_pmf(params: &GWParams, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    let ln_one_minus_qk = (-(kf * params.q.ln()).exp_m1()).ln();
    (-params.c + kf * params.c.ln() + ln_one_minus_qk - params.theta.ln() - ln_factorial(k)).exp()
}

/// Sum `term(k)` for `k = start, start+1, ...` until a term drops below
/// `1e-12` after at least three consecutive decreases.
pub(crate) fn poisson_series(start: u64, mut term: impl FnMut(u64) -> f64) -> (f64, u64) {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut decreasing = 0;
    let mut k = start;
    loop {
        let t = term(k);
        sum += t;
        if t < prev {
            decreasing += 1;
        } else {
            decreasing = 0;
        }
        prev = t;
        if decreasing >= 3 && t.abs() < SERIES_EPS {
            return (sum, k);
        }
        k += 1;
    }
}

/// Degree-law table `r_0..r_kmax` extended until the masses fall below
/// `1e-30` past the mode.
pub fn degree_table(params: &GWParams) -> Vec<f64> {
    let mut table = vec![0.0];
    let mut k = 1;
    loop {
        let r = degree_pmf(params, k);
        table.push(r);
        if k as f64 > params.c && r < 1e-30 {
            return table;
        }
        k += 1;
    }
}

/// `s_k(c) = Σ_{j > k} r_j(c)`, summed from the far tail inward.
pub fn degree_tail(params: &GWParams, k: u64) -> f64 {
    let table = degree_table(params);
    let k = k as usize;
    if k + 1 >= table.len() {
        return 0.0;
    }
    table[k + 1..].iter().rev().sum()
}

/// `Σ_{k≥0} e^{-1} ln(1 + k) / k!`, the mean log root degree of the
/// critical tree conditioned to survive, whose root degree is `1 + Poisson(1)`.
pub fn critical_log_degree_mean() -> f64 {
    poisson_series(0, |k| (-1.0 - ln_factorial(k)).exp() * ((1 + k) as f64).ln()).0
}

/// Bounds on `f(c)` and `f'(c)` derived from the root-degree law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub c: f64,
    pub f_lower: f64,
    pub f_upper: f64,
    pub fprime_lower: f64,
}

/// `f_upper = E[ln deg]`, `f_lower = f_upper - E_1[ln deg]` floored at 0,
/// and `f'(c) > (c - 1) e^{-c q} / c^2`.
///
/// `kmax` is a minimum truncation index; the series is extended past it
/// until the terms are negligible.
pub fn f_bounds(params: &GWParams, kmax: u64) -> BoundsRecord {
    let mut upper = 0.0;
    let mut prev = f64::INFINITY;
    let mut decreasing = 0;
    let mut k = 1;
    loop {
        let t = degree_pmf(params, k) * (k as f64).ln();
        upper += t;
        decreasing = if t < prev { decreasing + 1 } else { 0 };
        prev = t;
        if k >= kmax && decreasing >= 3 && t < SERIES_EPS {
            break;
        }
        k += 1;
    }
    let c = params.c;
    BoundsRecord {
        c,
        f_upper: upper,
        f_lower: (upper - critical_log_degree_mean()).max(0.0),
        fprime_lower: (c - 1.0) * (-c * params.q).exp() / (c * c),
    }
}

/// `g(c, δ) = δ - ln(1 + δ/c)`, the Poisson mean left over when the root
/// degree at `c + δ` is coupled above the root degree at `c`.
pub fn g_gap(c: f64, delta: f64) -> Result<f64> {
    if !(c > 1.0 && c.is_finite() && delta > 0.0 && delta.is_finite()) {
        return Err(domain("g_gap", format!("need c > 1 and delta > 0, got c = {c}, delta = {delta}")));
    }
    Ok(delta - (delta / c).ln_1p())
}

/// `β(c) = lim_{δ→0} g(c, δ)/δ = 1 - 1/c`.
pub fn beta(c: f64) -> Result<f64> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(domain("beta", format!("need c > 1, got {c}")));
    }
    Ok(1.0 - 1.0 / c)
}
