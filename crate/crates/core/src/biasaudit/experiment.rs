use std::collections::BTreeMap;

use serde::ser::Serializer;
use serde::Serialize;

use super::{overall_shift, tag_shift_matrix, AuditError, OverallShiftReport, TagSet};
use crate::classifier::{predict_batch, train, ArchitectureConfig, ModelParameters, TrainConfig};
use crate::corpus::{Dataset, Split};
use crate::counterfactual::{
    augment_training_set, build_paired_test_set, flag_corpus, AugmentReport, BiasAttribute, ExclusionRules,
    PairedAuditSet, SwapLexicon,
};
use crate::evaluation::{apply_thresholds, compute_metrics, gold_for, tune_thresholds, MetricsReport, ThresholdTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub attribute: BiasAttribute,
    pub dropped_ambiguous: usize,
    pub report: OverallShiftReport,
}

/// Predicts every form of a paired set and scores it.
pub fn audit_paired(
    model: &ModelParameters,
    paired: &PairedAuditSet,
    tags: TagSet,
) -> Result<AuditOutcome, AuditError> {
    if paired.is_empty() {
        return Err(AuditError::EmptyAuditSet(paired.attribute.to_string()));
    }
    let preds = predict_batch(model, paired.all_forms());
    let matrix = tag_shift_matrix(&preds, paired, &tags.indices(model.taxonomy()))?;
    Ok(AuditOutcome {
        attribute: paired.attribute,
        dropped_ambiguous: paired.dropped_ambiguous,
        report: overall_shift(&matrix)?,
    })
}

/// Flags the test split, builds the paired set and scores it.
pub fn audit(
    model: &ModelParameters,
    dataset: &Dataset,
    lexicon: &SwapLexicon,
    rules: &ExclusionRules,
    tags: TagSet,
) -> Result<AuditOutcome, AuditError> {
    model.check_taxonomy(dataset.taxonomy())?;
    let subset = flag_corpus(&dataset.split_view(Split::Test), lexicon, rules);
    audit_paired(model, &build_paired_test_set(&subset), tags)
}

/// Tunes thresholds on validation and reports metrics on test.
pub fn evaluate_model(
    model: &ModelParameters,
    dataset: &Dataset,
) -> Result<(ThresholdTable, MetricsReport), AuditError> {
    model.check_taxonomy(dataset.taxonomy())?;
    dataset.require_splits(&[Split::Validation, Split::Test])?;
    let val: Vec<_> = dataset.entries().iter().filter(|e| e.split == Split::Validation).collect();
    let test: Vec<_> = dataset.entries().iter().filter(|e| e.split == Split::Test).collect();
    let val_preds = predict_batch(model, val);
    let table = tune_thresholds(&val_preds, &gold_for(&val_preds, dataset)?);
    let test_preds = predict_batch(model, test);
    let assign = apply_thresholds(&test_preds, &table)?;
    let metrics = compute_metrics(&assign, &gold_for(&test_preds, dataset)?, dataset.taxonomy());
    Ok((table, metrics))
}

#[derive(Debug, Clone)]
pub struct AttributeSetup {
    pub lexicon: SwapLexicon,
    pub rules: ExclusionRules,
}

impl AttributeSetup {
    pub fn default_for(attribute: BiasAttribute) -> AttributeSetup {
        AttributeSetup { lexicon: SwapLexicon::default_for(attribute), rules: ExclusionRules::default_for(attribute) }
    }
}

/// An overall score, or a marker that the attribute had no audit families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasScore {
    Computed(f64),
    NotComputable,
}

impl BiasScore {
    pub fn value(self) -> Option<f64> {
        match self {
            BiasScore::Computed(v) => Some(v),
            BiasScore::NotComputable => None,
        }
    }
}

impl Serialize for BiasScore {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

/// One line of the side-by-side table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdaRow {
    pub arm: String,
    pub avg_precision: f64,
    pub avg_f1: f64,
    pub bias: BTreeMap<BiasAttribute, BiasScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub arm: String,
    pub train_size: usize,
    pub model_fingerprint: String,
    pub final_validation_loss: Option<f64>,
    pub metrics: MetricsReport,
    pub audits: Vec<AuditOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdaReport {
    pub seed: u64,
    pub arch: ArchitectureConfig,
    pub train: TrainConfig,
    pub tag_set: TagSet,
    pub augmentation: AugmentReport,
    pub audit_families: BTreeMap<BiasAttribute, usize>,
    pub table: Vec<CdaRow>,
    pub arms: Vec<ArmReport>,
}

impl CdaReport {
    pub fn row(&self, arm: &str) -> Option<&CdaRow> {
        self.table.iter().find(|r| r.arm == arm)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn run_arm(
    name: &str,
    train_set: &Dataset,
    eval_set: &Dataset,
    arch: &ArchitectureConfig,
    cfg: &TrainConfig,
    paired: &[PairedAuditSet],
    tags: TagSet,
) -> Result<(CdaRow, ArmReport), AuditError> {
    let trained = train(train_set, arch, cfg)?;
    let (_, metrics) = evaluate_model(&trained.model, eval_set)?;
    let mut bias = BTreeMap::new();
    let mut audits = Vec::new();
    for p in paired {
        if p.is_empty() {
            bias.insert(p.attribute, BiasScore::NotComputable);
            continue;
        }
        let outcome = audit_paired(&trained.model, p, tags)?;
        bias.insert(p.attribute, BiasScore::Computed(outcome.report.overall_shift));
        audits.push(outcome);
    }
    let row = CdaRow { arm: name.into(), avg_precision: metrics.avg.precision, avg_f1: metrics.avg.f1, bias };
    let report = ArmReport {
        arm: name.into(),
        train_size: train_set.split_len(Split::Train),
        model_fingerprint: trained.model.fingerprint(),
        final_validation_loss: trained.history.last().and_then(|r| r.validation_loss),
        metrics,
        audits,
    };
    Ok((row, report))
}

/// Trains a baseline and an augmented model from the same seed and reports
/// task metrics and bias scores for both.
pub fn cda_experiment(
    dataset: &Dataset,
    arch: &ArchitectureConfig,
    cfg: &TrainConfig,
    attributes: &[AttributeSetup],
    tags: TagSet,
) -> Result<CdaReport, AuditError> {
    dataset.require_splits(&[Split::Train, Split::Validation, Split::Test])?;
    let subsets: Vec<_> = attributes.iter().map(|a| flag_corpus(dataset, &a.lexicon, &a.rules)).collect();
    let (augmented, augmentation) = augment_training_set(dataset, &subsets)?;
    let paired: Vec<PairedAuditSet> = subsets.iter().map(build_paired_test_set).collect();
    let (base_row, base) = run_arm("baseline", dataset, dataset, arch, cfg, &paired, tags)?;
    let (cda_row, cda) = run_arm("cda", &augmented, dataset, arch, cfg, &paired, tags)?;
    Ok(CdaReport {
        seed: cfg.seed,
        arch: arch.clone(),
        train: cfg.clone(),
        tag_set: tags,
        augmentation,
        audit_families: paired.iter().map(|p| (p.attribute, p.len())).collect(),
        table: vec![base_row, cda_row],
        arms: vec![base, cda],
    })
}
