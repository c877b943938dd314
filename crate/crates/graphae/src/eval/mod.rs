//! Evaluation: edge splits for link prediction, ranking and classification
//! metrics, partition agreement scores and hyperparameter selection.

mod partition;
mod scores;
mod split;

use serde::Serialize;

pub use partition::{ami, ari};
pub use scores::{auc, average_precision, ranking_metrics, RankingMetrics};
pub use split::{split_edges, split_edges_with, EdgeSplit, SplitTask};

use crate::error::{invalid, Result};

/// Index of the candidate maximising `(val_auc + Q) / 2`; ties go to the
/// earliest candidate.
pub fn select_hyperparameters(candidates: &[(f64, f64)]) -> Result<usize> {
    if candidates.is_empty() {
        return invalid("no candidates to select from");
    }
    let mut best = 0;
    for (k, &(auc, q)) in candidates.iter().enumerate() {
        let (ba, bq) = candidates[best];
        if (auc + q) / 2.0 > (ba + bq) / 2.0 {
            best = k;
        }
    }
    Ok(best)
}

/// Aggregate of one metric over several seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub task: String,
    pub metric: String,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub runs: usize,
    pub seed_base: u64,
}

impl MetricSummary {
    pub fn from_values(task: &str, metric: &str, values: &[f64], seed_base: u64) -> MetricSummary {
        let (mean, std) = mean_std(values);
        MetricSummary { task: task.into(), metric: metric.into(), mean, std, runs: values.len(), seed_base }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
