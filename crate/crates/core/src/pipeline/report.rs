use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::trained::Prediction;
use crate::corpus::{compute_metrics, LabelSet, Metrics};
use crate::error::{Error, Result};
use crate::gnn::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Summed one-vs-all loss per utterance, averaged over the epoch.
    pub mean_loss: f64,
    /// Filled in only when early stopping on training accuracy is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
}

/// Result of `train` or `evaluate`. Metrics always describe the
/// predictions written next to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// `train` or `eval`.
    pub command: String,
    /// Corpus the metrics were computed on.
    pub corpus: PathBuf,
    pub experiment: ExperimentConfig,
    pub model: ModelConfig,
    pub seed: u64,
    pub epochs: Vec<EpochStats>,
    pub targets: usize,
    pub missing_srl: usize,
    pub metrics: Metrics,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(Error::io(path))
    }

    /// The report with wall time zeroed, for run-to-run comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }
}

pub fn score_predictions(preds: &[Prediction], labels: &LabelSet) -> Result<Metrics> {
    let pairs: Vec<(&str, &str)> = preds.iter().map(|p| (p.gold.as_str(), p.pred.as_str())).collect();
    compute_metrics(&pairs, labels)
}
