use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::LabelSet;
use crate::error::{Error, Result};

/// Weighted accuracy (overall fraction correct), unweighted accuracy (mean
/// of per-label recall over labels present in gold) and the confusion
/// matrix indexed `[gold][pred]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub weighted_accuracy: f64,
    pub unweighted_accuracy: f64,
    /// `None` for labels that never occur as gold.
    pub per_label_accuracy: IndexMap<String, Option<f64>>,
    pub confusion: Vec<Vec<u64>>,
    pub total: u64,
    pub correct: u64,
}

pub fn compute_metrics<G: AsRef<str>, P: AsRef<str>>(preds: &[(G, P)], labels: &LabelSet) -> Result<Metrics> {
    if preds.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let e = labels.len();
    let mut confusion = vec![vec![0u64; e]; e];
    for (gold, pred) in preds {
        let (gold, pred) = (gold.as_ref(), pred.as_ref());
        let g = labels
            .ordinal(gold)
            .ok_or_else(|| Error::PredictionLabel(gold.to_string()))?;
        let p = labels
            .ordinal(pred)
            .ok_or_else(|| Error::PredictionLabel(pred.to_string()))?;
        confusion[g][p] += 1;
    }

    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..e).map(|i| confusion[i][i]).sum();
    let mut per_label_accuracy = IndexMap::with_capacity(e);
    let mut present = 0usize;
    let mut recall_sum = 0.0;
    for (i, label) in labels.iter().enumerate() {
        let count: u64 = confusion[i].iter().sum();
        let acc = (count > 0).then(|| confusion[i][i] as f64 / count as f64);
        if let Some(a) = acc {
            recall_sum += a;
            present += 1;
        }
        per_label_accuracy.insert(label.to_string(), acc);
    }

    Ok(Metrics {
        weighted_accuracy: correct as f64 / total as f64,
        unweighted_accuracy: recall_sum / present as f64,
        per_label_accuracy,
        confusion,
        total,
        correct,
    })
}
