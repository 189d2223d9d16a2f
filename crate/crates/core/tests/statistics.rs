//! Statistical properties of the samplers and estimators at moderate size.

use gwtree::analytic::{degree_pmf, GWParams};
use gwtree::domination::CoupledPair;
use gwtree::rng::substream;
use gwtree::spanning::{empirical_f, giant_component, sample_gnp};
use gwtree::trees::{
    sample_pgw_star, sample_uniform_rooted_tree, subtree_sizes, subtree_stats, LazyTree, NodeType, PgwStarTree, SubtreeSize,
};
use gwtree::walk::{estimate_return_integral, pbar_decay_diagnostic};

#[test]
fn pgw_star_samples_satisfy_type_invariants() {
    for seed in 0..10_000 {
        let t = sample_pgw_star(2.0, 3, seed).unwrap();
        t.validate().unwrap();
        let stats = subtree_stats(&t);
        assert!(stats.n_infinite >= 1);
    }
}

#[test]
fn finite_and_infinite_root_counts_are_uncorrelated() {
    let n = 1_000_000u64;
    let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0f64, 0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        let t = PgwStarTree::new(2.0, i).unwrap();
        let t = t.tree();
        let mut n1 = 0.0;
        let mut ninf = 0.0;
        for w in t.children(0) {
            match t.kind(w) {
                NodeType::Infinite => ninf += 1.0,
                _ if t.num_children(w) == 0 => n1 += 1.0,
                _ => {}
            }
        }
        sx += n1;
        sy += ninf;
        sxy += n1 * ninf;
        sxx += n1 * n1;
        syy += ninf * ninf;
    }
    let nf = n as f64;
    let cov = sxy / nf - sx / nf * (sy / nf);
    let (vx, vy) = (sxx / nf - (sx / nf).powi(2), syy / nf - (sy / nf).powi(2));
    // The sample covariance of independent variables has sd ≈ sqrt(vx vy / n).
    let sigma = (vx * vy / nf).sqrt();
    assert!(cov.abs() <= 4.0 * sigma, "cov {cov} sigma {sigma}");
}

#[test]
fn coupled_root_degrees_follow_the_degree_law() {
    let (l, m) = (1.2, 1.5);
    let n = 1_000_000u64;
    let mut lo = [0u64; 16];
    let mut hi = [0u64; 16];
    for i in 0..n {
        let p = CoupledPair::new(l, m, i).unwrap();
        lo[p.lo().degree(0).min(15)] += 1;
        hi[p.hi().degree(0).min(15)] += 1;
    }
    for (h, c) in [(&lo, l), (&hi, m)] {
        let params = GWParams::new(c).unwrap();
        for k in 1..15u64 {
            let p = degree_pmf(&params, k);
            if p * (n as f64) < 10.0 {
                continue;
            }
            let z = (h[k as usize] as f64 / n as f64 - p) / (p * (1.0 - p) / n as f64).sqrt();
            assert!(z.abs() <= 4.0, "c = {c}, k = {k}, z = {z}");
        }
    }
}

/// Heuristic witness of the size-conditioned domination chain: the largest
/// root-child subtree of a uniform rooted tree on n vertices grows with n.
#[test]
fn heuristic_largest_root_subtree_grows_with_size() {
    let reps = 20_000u64;
    let tail = |n: usize, m: u64| {
        let hits = (0..reps)
            .filter(|&i| {
                let t = sample_uniform_rooted_tree(n, substream(3, "tn", i * 100 + n as u64)).unwrap();
                let sizes = subtree_sizes(&t);
                t.children(0).map(|w| sizes[w]).max().is_some_and(|s| s >= SubtreeSize::Finite(m))
            })
            .count();
        hits as f64 / reps as f64
    };
    for m in [1u64, 2, 3, 5] {
        let (a, b, c) = (tail(5, m), tail(10, m), tail(20, m));
        let sigma = |p: f64, q: f64| ((p * (1.0 - p) + q * (1.0 - q)) / reps as f64).sqrt();
        assert!(b >= a - 3.0 * sigma(a, b), "m = {m}: {a} then {b}");
        assert!(c >= b - 3.0 * sigma(b, c), "m = {m}: {b} then {c}");
    }
}

#[test]
fn giant_fraction_matches_survival_probability() {
    let n = 5000;
    let theta = GWParams::new(2.0).unwrap().theta;
    let fr: Vec<f64> = (0..100)
        .map(|s| giant_component(&sample_gnp(n, 2.0 / n as f64, s).unwrap()).0.n() as f64 / n as f64)
        .collect();
    let (m, se) = gwtree::dist::mean_stderr(&fr);
    assert!((m - theta).abs() <= 3.0 * se, "{m} ± {se} vs {theta}");
}

#[test]
fn empirical_entropy_increases_with_c() {
    let a = empirical_f(1500, 2.0, 10, 1).unwrap();
    let b = empirical_f(1500, 4.0, 10, 1).unwrap();
    assert!(b.separation(&a) >= 3.0);
}

#[test]
fn return_integral_grows_with_truncation() {
    let a = estimate_return_integral(2.0, 20, 20_000, 9).unwrap();
    let b = estimate_return_integral(2.0, 60, 20_000, 9).unwrap();
    assert!(b.value > a.value);
    // Σ_{20<k≤60} 1/k bounds the difference, p_k being at most 1.
    let h: f64 = (21..=60).map(|k| 1.0 / k as f64).sum();
    assert!(b.value - a.value < h);
}

#[test]
fn mean_return_probabilities_decay() {
    let t = pbar_decay_diagnostic(2.0, 60, 100_000, 4).unwrap();
    assert!(t.fit_slope < 0.0);
    let even: Vec<&(u32, f64, f64)> = t.rows.iter().filter(|r| r.0 % 2 == 0 && r.0 > 10).collect();
    for w in even.windows(2) {
        let sigma = (w[0].2.powi(2) + w[1].2.powi(2)).sqrt();
        assert!(w[1].1 <= w[0].1 + 3.0 * sigma, "k = {}: {} after {}", w[1].0, w[1].1, w[0].1);
    }
    assert!(t.rows.iter().filter(|r| r.0 % 2 == 1).all(|r| r.1 == 0.0));
}
