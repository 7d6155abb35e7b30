use std::fmt::Write as _;

use serde::Serialize;

use super::ModelError;
use crate::corpus::GroupName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    /// One final representation read by every head.
    Base,
    /// Shared lower layers, then three replicated final sub-layers with
    /// group-partitioned heads.
    Combinatorial,
}

impl ArchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Base => "base",
            ArchKind::Combinatorial => "combinatorial",
        }
    }

    pub fn parse(s: &str) -> Option<ArchKind> {
        match s {
            "base" => Some(ArchKind::Base),
            "combinatorial" => Some(ArchKind::Combinatorial),
            _ => None,
        }
    }

    pub fn final_layers(self) -> usize {
        match self {
            ArchKind::Base => 1,
            ArchKind::Combinatorial => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplicateInit {
    /// All three sub-layers start as copies of one draw.
    Copy,
    /// Three independent draws.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchitectureConfig {
    pub kind: ArchKind,
    /// Total encoder layers; the combinatorial form shares the first `layers - 1`.
    pub layers: usize,
    pub hidden_dim: usize,
    pub feature_dim: usize,
    pub dropout_rate: f64,
    /// Freeze the embedding table and the first encoder layer.
    pub freeze_embedding: bool,
    pub replicate_init: ReplicateInit,
    pub max_tokens_per_entry: usize,
    /// Half-width of the uniform embedding initialization.
    pub embedding_init: f64,
    /// Tokens hashed to the reserved bucket 0 (lowercase).
    pub masked_tokens: Vec<String>,
    pub seed: u64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            kind: ArchKind::Combinatorial,
            layers: 3,
            hidden_dim: 64,
            feature_dim: 4096,
            dropout_rate: 0.2,
            freeze_embedding: false,
            replicate_init: ReplicateInit::Copy,
            max_tokens_per_entry: 200,
            embedding_init: 0.1,
            masked_tokens: Vec::new(),
            seed: 0,
        }
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.layers < 1 {
            return bad("layers must be at least 1");
        }
        if self.kind == ArchKind::Combinatorial && self.layers < 2 {
            return bad("the combinatorial architecture needs layers >= 2");
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive");
        }
        if self.feature_dim < 2 {
            return bad("feature_dim must be at least 2 (bucket 0 is reserved)");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must be in [0, 1)");
        }
        if self.max_tokens_per_entry == 0 {
            return bad("max_tokens_per_entry must be positive");
        }
        if !(self.embedding_init.is_finite() && self.embedding_init >= 0.0) {
            return bad("embedding_init must be finite and non-negative");
        }
        Ok(())
    }

    pub fn shared_layers(&self) -> usize {
        self.layers - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size_train: usize,
    pub batch_size_eval: usize,
    /// Step decay factor applied once per epoch.
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Loss weight per task group, in `GroupName::ALL` order.
    pub group_weights: [f64; 5],
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Fine-tuning hyperparameters of the reference setup (AdamW with
    /// PyTorch defaults, step decay 0.4 per epoch).
    fn default() -> Self {
        TrainConfig {
            epochs: 3,
            learning_rate: 1e-4,
            batch_size_train: 8,
            batch_size_eval: 16,
            lr_decay: 0.4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            group_weights: [1.0; 5],
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings for training the small hashed encoder from scratch, where
    /// the fine-tuning learning rate is far too small to move random
    /// weights in a handful of epochs.
    pub fn desk() -> TrainConfig {
        TrainConfig { epochs: 5, learning_rate: 1e-2, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.batch_size_train == 0 || self.batch_size_eval == 0 {
            return bad("batch sizes must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must be in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || self.eps.is_nan()
            || self.eps <= 0.0
        {
            return bad("adam betas must be in [0, 1) and eps positive");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be finite and non-negative");
        }
        if self.group_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("group weights must be finite and non-negative");
        }
        Ok(())
    }

    pub fn group_weight(&self, group: GroupName) -> f64 {
        self.group_weights[GroupName::ALL.iter().position(|g| *g == group).expect("known group")]
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Applies `key = value` lines to the two configs. Blank lines and lines
/// starting with `#` are ignored; values may be wrapped in double quotes.
pub fn apply_config_text(text: &str, arch: &mut ArchitectureConfig, train: &mut TrainConfig) -> Result<(), ModelError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| ModelError::Config(format!("line {}: {m}", i + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
        let key = key.trim();
        let value = value.trim();
        let value = value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value);
        let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("{key}: not a number: {v:?}")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{key}: not a non-negative integer: {v:?}")));
        match key {
            "kind" | "arch" => {
                arch.kind = ArchKind::parse(value).ok_or_else(|| err(format!("unknown arch {value:?}")))?
            }
            "layers" => arch.layers = int(value)?,
            "hidden_dim" => arch.hidden_dim = int(value)?,
            "feature_dim" => arch.feature_dim = int(value)?,
            "dropout_rate" => arch.dropout_rate = num(value)?,
            "freeze_embedding" => {
                arch.freeze_embedding = parse_bool(value).ok_or_else(|| err(format!("not a boolean: {value:?}")))?
            }
            "replicate_init" => {
                arch.replicate_init = match value {
                    "copy" => ReplicateInit::Copy,
                    "independent" => ReplicateInit::Independent,
                    _ => return Err(err(format!("unknown replicate_init {value:?}"))),
                }
            }
            "max_tokens_per_entry" => arch.max_tokens_per_entry = int(value)?,
            "embedding_init" => arch.embedding_init = num(value)?,
            "masked_tokens" => {
                arch.masked_tokens =
                    value.split(',').map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty()).collect()
            }
            "seed" => {
                let s = value.parse::<u64>().map_err(|_| err(format!("seed: not an integer: {value:?}")))?;
                arch.seed = s;
                train.seed = s;
            }
            "epochs" => train.epochs = int(value)?,
            "learning_rate" => train.learning_rate = num(value)?,
            "batch_size_train" => train.batch_size_train = int(value)?,
            "batch_size_eval" => train.batch_size_eval = int(value)?,
            "lr_decay" => train.lr_decay = num(value)?,
            "weight_decay" => train.weight_decay = num(value)?,
            "adam_beta1" => train.beta1 = num(value)?,
            "adam_beta2" => train.beta2 = num(value)?,
            "adam_eps" => train.eps = num(value)?,
            other => match other.strip_prefix("group_weight.").and_then(GroupName::parse) {
                Some(group) => {
                    let idx = GroupName::ALL.iter().position(|g| *g == group).expect("known group");
                    train.group_weights[idx] = num(value)?;
                }
                None => return Err(err(format!("unknown key {other:?}"))),
            },
        }
    }
    arch.validate()?;
    train.validate()
}

/// `key = value` echo of an architecture; parsed back by `apply_config_text`.
pub fn arch_echo(arch: &ArchitectureConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kind = {}", arch.kind.as_str());
    let _ = writeln!(s, "layers = {}", arch.layers);
    let _ = writeln!(s, "hidden_dim = {}", arch.hidden_dim);
    let _ = writeln!(s, "feature_dim = {}", arch.feature_dim);
    let _ = writeln!(s, "dropout_rate = {:?}", arch.dropout_rate);
    let _ = writeln!(s, "freeze_embedding = {}", arch.freeze_embedding);
    let _ = writeln!(
        s,
        "replicate_init = {}",
        match arch.replicate_init {
            ReplicateInit::Copy => "copy",
            ReplicateInit::Independent => "independent",
        }
    );
    let _ = writeln!(s, "max_tokens_per_entry = {}", arch.max_tokens_per_entry);
    let _ = writeln!(s, "embedding_init = {:?}", arch.embedding_init);
    let _ = writeln!(s, "masked_tokens = \"{}\"", arch.masked_tokens.join(","));
    let _ = writeln!(s, "seed = {}", arch.seed);
    s
}

pub fn train_echo(train: &TrainConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "epochs = {}", train.epochs);
    let _ = writeln!(s, "learning_rate = {:?}", train.learning_rate);
    let _ = writeln!(s, "batch_size_train = {}", train.batch_size_train);
    let _ = writeln!(s, "batch_size_eval = {}", train.batch_size_eval);
    let _ = writeln!(s, "lr_decay = {:?}", train.lr_decay);
    let _ = writeln!(s, "weight_decay = {:?}", train.weight_decay);
    let _ = writeln!(s, "adam_beta1 = {:?}", train.beta1);
    let _ = writeln!(s, "adam_beta2 = {:?}", train.beta2);
    let _ = writeln!(s, "adam_eps = {:?}", train.eps);
    for (g, w) in GroupName::ALL.iter().zip(train.group_weights) {
        let _ = writeln!(s, "group_weight.{g} = {w:?}");
    }
    s
}
