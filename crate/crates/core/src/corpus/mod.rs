//! Humanitarian taxonomy and labeled entry collections.

mod dataset;
mod taxonomy;

pub use dataset::{load_dataset, parse_dataset, BiasMeta, Dataset, Entry, Labels, Split};
pub use taxonomy::{default_taxonomy, GroupName, Level, TagTaxonomy, TaskGroup, LEVEL_SEPARATOR};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("record {id:?}: unknown tag {tag:?} in group {group}")]
    UnknownTag { id: String, group: String, tag: String },
    #[error("record {id:?}: unknown task group {group:?}")]
    UnknownGroup { id: String, group: String },
    #[error("duplicate entry id {id:?}")]
    DuplicateId { id: String },
    #[error("record {id:?}: text is empty")]
    EmptyText { id: String },
    #[error("the {0} split is empty")]
    EmptySplit(Split),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}
