//! Counterfactual bias metrics over paired audit sets and the
//! augmentation comparison experiment.

mod experiment;
mod heatmap;
mod shift;

pub use experiment::{
    audit, audit_paired, cda_experiment, evaluate_model, ArmReport, AttributeSetup, AuditOutcome, BiasScore, CdaReport,
    CdaRow,
};
pub use heatmap::{heatmap_csv, heatmap_svg};
pub use shift::{
    median, overall_shift, p_shift, tag_shift, tag_shift_matrix, OverallShiftReport, TagSet, TagShiftMatrix,
};

use thiserror::Error;

use crate::classifier::ModelError;
use crate::corpus::CorpusError;
use crate::counterfactual::CounterfactualError;
use crate::evaluation::EvalError;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("no prediction for audit form {id:?}")]
    MissingPrediction { id: String },
    #[error("tag-shift for {tag:?} under {transition} is not computable (empty audit set)")]
    NotComputable { tag: String, transition: String },
    #[error("malformed tag-shift matrix: {0}")]
    MalformedMatrix(String),
    #[error("no flagged, unambiguous {0} families in the test split")]
    EmptyAuditSet(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Counterfactual(#[from] CounterfactualError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
