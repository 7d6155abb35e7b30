//! Bias-label detection, targeted counterfactual rewriting, and the
//! bias-subset / augmented / paired-audit sets built from them.

mod detect;
mod generate;
mod lexicon;
mod rules;
mod subset;

pub use detect::{detect_bias_label, Exclusion, FlagResult, KeywordSpan, Outcome};
pub use generate::{generate_variants, infer_role, rewrite, variant_id, CounterfactualFamily, Variant};
pub use lexicon::{
    parse_country_lexicon, parse_gender_lexicon, BiasAttribute, LexiconRow, Role, SwapLexicon, LABEL_COUNT,
};
pub use rules::{ExclusionRules, RuleKind};
pub use subset::{
    augment_training_set, build_paired_test_set, flag_corpus, AuditFamily, AugmentReport, BiasSubset, PairedAuditSet,
};

use thiserror::Error;

use crate::corpus::CorpusError;

#[derive(Debug, Error)]
pub enum CounterfactualError {
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("exclusion list: {0}")]
    Exclusions(String),
    #[error("entry {id:?} is not flagged for this attribute")]
    NotFlagged { id: String },
    #[error("subset line {line}: {reason}")]
    Subset { line: usize, reason: String },
    #[error("subset refers to entry {id:?}, which is not in the dataset")]
    UnknownOriginal { id: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
