//! Prompt-and-verbalizer zero-shot tagging on top of any mask-fill
//! probability source.

mod classify;
mod provider;
mod verbalizer;

pub use classify::{
    build_prompt, classify_zero_shot, group_ranking, run_zero_shot, Aggregation, PromptTemplate, ZeroShotConfig,
    ZeroShotPrediction, ZeroShotReport, ZeroShotRun, MASK,
};
pub use provider::{Distribution, FileProvider, MaskFillProvider, StubProvider};
pub use verbalizer::{score_labels, Verbalizer};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ZeroShotError {
    #[error("template must contain exactly one {MASK} (found {0})")]
    Template(usize),
    #[error("verbalizer line {line}: {reason}")]
    Verbalizer { line: usize, reason: String },
    #[error("verbalizer has no words for tag {0:?}")]
    MissingTag(String),
    #[error("provider file line {line}: {reason}")]
    ProviderFile { line: usize, reason: String },
    #[error("provider has no distribution for entry {id:?}")]
    ProviderMissing { id: String },
    #[error("invalid decision threshold {0}")]
    Threshold(f64),
}
