use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoinError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
}

impl MetricSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Evaluation output aggregated over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: String,
    pub dataset: String,
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub skipped_users: usize,
}

impl MetricsReport {
    /// Aggregates one `name → value` map per seed. Every run must report the
    /// same metric names.
    pub fn aggregate(
        task: &str,
        dataset: &str,
        seeds: Vec<u64>,
        runs: &[BTreeMap<String, f64>],
        skipped_users: usize,
    ) -> Result<Self> {
        let first = runs
            .first()
            .ok_or_else(|| CoinError::InvalidArgument("no runs to aggregate".into()))?;
        let mut metrics = BTreeMap::new();
        for name in first.keys() {
            let xs: Vec<f64> = runs
                .iter()
                .map(|r| {
                    r.get(name)
                        .copied()
                        .ok_or_else(|| CoinError::InvalidArgument(format!("metric {name} missing from a run")))
                })
                .collect::<Result<_>>()?;
            metrics.insert(name.clone(), MetricSummary::from_samples(&xs));
        }
        Ok(Self {
            task: task.to_string(),
            dataset: dataset.to_string(),
            seeds,
            metrics,
            skipped_users,
        })
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.mean)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| CoinError::io(path, e))
    }
}
