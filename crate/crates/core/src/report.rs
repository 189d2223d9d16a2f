//! Monte Carlo output records.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dist::mean_stderr;

/// Truncation parameters under which an estimate was produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Largest walk length whose return probability is included.
    pub k: Option<u32>,
    /// Depth horizon of the sampled trees.
    pub depth: Option<u32>,
    /// Vertex count of the sampled random graphs.
    pub graph_n: Option<usize>,
}

/// Point estimate with its standard error and everything needed to
/// reproduce it.
///
/// Wall time is kept for logging only and is not serialized, so that the
/// same parameters and seed always produce byte-identical artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub c: f64,
    pub value: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub stderr: f64,
    pub n_samples: u64,
    pub truncation: Truncation,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl EstimateReport {
    /// Build from per-sample values listed in substream order.
    pub fn from_samples(
        estimator: &str,
        c: f64,
        samples: &[f64],
        truncation: Truncation,
        seed: u64,
        wall_time: Duration,
    ) -> Self {
        let (value, stderr) = mean_stderr(samples);
        Self {
            estimator: estimator.to_owned(),
            c,
            value,
            stderr,
            n_samples: samples.len() as u64,
            truncation,
            seed,
            wall_time,
        }
    }

    /// Column order of [`EstimateReport::csv_record`]. Frozen.
    pub const CSV_HEADER: [&'static str; 9] = [
        "estimator", "c", "value", "stderr", "n_samples", "k", "depth", "graph_n", "seed",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |x: Option<String>| x.unwrap_or_default();
        vec![
            self.estimator.clone(),
            self.c.to_string(),
            self.value.to_string(),
            self.stderr.to_string(),
            self.n_samples.to_string(),
            opt(self.truncation.k.map(|v| v.to_string())),
            opt(self.truncation.depth.map(|v| v.to_string())),
            opt(self.truncation.graph_n.map(|v| v.to_string())),
            self.seed.to_string(),
        ]
    }

    /// `(self - other) / sqrt(se_self^2 + se_other^2)`.
    pub fn separation(&self, other: &EstimateReport) -> f64 {
        (self.value - other.value) / self.stderr.hypot(other.stderr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_time_is_not_serialized() {
        let mut a = EstimateReport::from_samples("x", 2.0, &[1.0, 2.0], Truncation::default(), 3, Duration::from_secs(1));
        let json_a = serde_json::to_string(&a).unwrap();
        a.wall_time = Duration::from_secs(99);
        assert_eq!(json_a, serde_json::to_string(&a).unwrap());
        assert!(!json_a.contains("wall"));
        assert_eq!(a.csv_record().len(), EstimateReport::CSV_HEADER.len());
    }
}
