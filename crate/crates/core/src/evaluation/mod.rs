//! Per-tag threshold tuning on validation predictions and per-group
//! precision/recall/F1 reporting.

mod metrics;
mod thresholds;

pub use metrics::{compute_metrics, GroupMetrics, MetricsReport, Summary, TagMetrics};
pub use thresholds::{
    apply_thresholds, f1_at, scan_tag, threshold_candidates, tune_thresholds, LabelAssignments, TagScan,
    ThresholdTable, GRID_POINTS,
};

use thiserror::Error;

use crate::classifier::PredictionMatrix;
use crate::corpus::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no gold labels for prediction row {id:?}")]
    MissingGold { id: String },
    #[error("tag columns differ: {0}")]
    ColumnMismatch(String),
    #[error("threshold table line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Gold label vectors aligned with the prediction rows.
pub fn gold_for(preds: &PredictionMatrix, dataset: &Dataset) -> Result<Vec<Vec<bool>>, EvalError> {
    if preds.tags.as_slice() != dataset.taxonomy().tags() {
        return Err(EvalError::ColumnMismatch("prediction tags differ from the dataset taxonomy".into()));
    }
    preds
        .ids
        .iter()
        .map(|id| {
            dataset
                .get(id)
                .map(|e| e.gold_vector(dataset.taxonomy()))
                .ok_or_else(|| EvalError::MissingGold { id: id.clone() })
        })
        .collect()
}
