//! Hashed-bag multi-label tagger: base and combinatorial forms, a seeded
//! AdamW training loop, batched prediction and a checksummed checkpoint.

mod checkpoint;
mod config;
mod encoder;
mod model;
mod optim;
mod predict;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{apply_config_text, arch_echo, train_echo, ArchKind, ArchitectureConfig, ReplicateInit, TrainConfig};
pub use encoder::{encode_text, FeatureVector};
pub use model::{DropoutMasks, Example, Layout, LossOptions, ModelParameters};
pub use optim::{AdamW, StepLr};
pub use predict::{predict_batch, PredictionMatrix};
pub use train::{train, EpochRecord, TrainedModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("config: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}, step {step}: loss is not finite (entry {entry:?})")]
    Diverged { epoch: usize, step: usize, entry: String },
    #[error("split {0} is empty")]
    EmptySplit(&'static str),
    #[error("model taxonomy does not match the dataset taxonomy")]
    TaxonomyMismatch,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
