//! Small discrete-distribution helpers shared by the samplers.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub use statrs::function::factorial::ln_factorial;

/// Draw from Poisson(`mean`); `mean == 0` gives 0.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}

/// Draw from Poisson(`mean`) conditioned to be positive, by inversion.
/// As `mean -> 0` the law tends to the point mass at 1.
pub fn zt_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean < 1e-12 {
        return 1;
    }
    let u: f64 = rng.random();
    // P(Q* = 1) = mean / (e^mean - 1)
    let mut p = mean / mean.exp_m1();
    let mut cdf = p;
    let mut k = 1u64;
    while u >= cdf && p > 0.0 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

/// Natural log of the Poisson(`mean`) pmf at `k`.
pub fn ln_poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mean.ln() - mean - ln_factorial(k)
}

/// Pairwise sum; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean, `sd / sqrt(n)`.
/// With fewer than two values the standard error is reported as 0.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
