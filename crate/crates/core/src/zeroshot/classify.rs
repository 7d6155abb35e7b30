use rayon::prelude::*;
use serde::Serialize;

use super::{score_labels, MaskFillProvider, Verbalizer, ZeroShotError};
use crate::corpus::{Dataset, Entry, GroupName, Split, TagTaxonomy};
use crate::evaluation::{compute_metrics, LabelAssignments, MetricsReport};
use crate::text::words;

pub const MASK: &str = "[MASK]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptTemplate {
    suffix: String,
}

impl PromptTemplate {
    pub fn new(suffix: impl Into<String>) -> Result<PromptTemplate, ZeroShotError> {
        let suffix = suffix.into();
        match suffix.matches(MASK).count() {
            1 => Ok(PromptTemplate { suffix }),
            n => Err(ZeroShotError::Template(n)),
        }
    }

    pub fn suffix(&self) -> &str {
        &self.suffix
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate { suffix: format!("It is about {MASK}") }
    }
}

/// Entry text cut after its `max_tokens`-th word (original bytes kept),
/// then one space and the template.
pub fn build_prompt(text: &str, template: &PromptTemplate, max_tokens: usize) -> String {
    let ws = words(text);
    let body = if ws.len() > max_tokens && max_tokens > 0 { &text[..ws[max_tokens - 1].end] } else { text };
    format!("{} {}", body.trim_end(), template.suffix)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Max,
    Mean,
}

impl Aggregation {
    pub fn parse(s: &str) -> Option<Aggregation> {
        match s {
            "max" => Some(Aggregation::Max),
            "mean" => Some(Aggregation::Mean),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroShotConfig {
    pub template: PromptTemplate,
    pub aggregation: Aggregation,
    /// Cutoff on group-normalized scores; `None` means 1 / (group size).
    pub threshold: Option<f64>,
    pub max_tokens: usize,
}

impl Default for ZeroShotConfig {
    fn default() -> Self {
        ZeroShotConfig {
            template: PromptTemplate::default(),
            aggregation: Aggregation::Max,
            threshold: None,
            max_tokens: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroShotPrediction {
    pub id: String,
    pub scores: Vec<f64>,
    /// Score divided by its group's score sum (0 for all-zero groups).
    pub normalized: Vec<f64>,
    pub predicted: Vec<bool>,
}

/// Tag indices of `group` ordered by descending score; ties keep taxonomy order.
pub fn group_ranking(scores: &[f64], taxonomy: &TagTaxonomy, group: GroupName) -> Vec<usize> {
    let mut idx = taxonomy.group_indices(group);
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

pub fn classify_zero_shot(
    entry: &Entry,
    provider: &dyn MaskFillProvider,
    verbalizer: &Verbalizer,
    taxonomy: &TagTaxonomy,
    config: &ZeroShotConfig,
) -> Result<ZeroShotPrediction, ZeroShotError> {
    if let Some(t) = config.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(ZeroShotError::Threshold(t));
        }
    }
    let prompt = build_prompt(&entry.text, &config.template, config.max_tokens);
    let dist = provider.fill(&entry.id, &prompt)?;
    let scores = score_labels(&dist, verbalizer, config.aggregation);
    let mut normalized = vec![0.0; scores.len()];
    let mut predicted = vec![false; scores.len()];
    for group in GroupName::ALL {
        let idx = taxonomy.group_indices(group);
        let sum: f64 = idx.iter().map(|&t| scores[t]).sum();
        if sum <= 0.0 {
            continue;
        }
        let cutoff = config.threshold.unwrap_or(1.0 / idx.len() as f64);
        for &t in &idx {
            normalized[t] = scores[t] / sum;
            predicted[t] = normalized[t] >= cutoff;
        }
    }
    Ok(ZeroShotPrediction { id: entry.id.clone(), scores, normalized, predicted })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotRun {
    pub predictions: Vec<ZeroShotPrediction>,
    pub assignments: LabelAssignments,
}

/// Classifies entries in parallel; output order follows the input.
pub fn run_zero_shot(
    entries: &[&Entry],
    provider: &dyn MaskFillProvider,
    verbalizer: &Verbalizer,
    taxonomy: &TagTaxonomy,
    config: &ZeroShotConfig,
) -> Result<ZeroShotRun, ZeroShotError> {
    let predictions: Vec<ZeroShotPrediction> = entries
        .par_iter()
        .map(|e| classify_zero_shot(e, provider, verbalizer, taxonomy, config))
        .collect::<Result<_, _>>()?;
    let assignments = LabelAssignments {
        ids: predictions.iter().map(|p| p.id.clone()).collect(),
        tags: taxonomy.tags().to_vec(),
        values: predictions.iter().flat_map(|p| p.predicted.iter().copied()).collect(),
    };
    Ok(ZeroShotRun { predictions, assignments })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedTags {
    pub id: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroShotReport {
    pub provider: String,
    pub split: Split,
    pub entries: usize,
    pub config: ZeroShotConfig,
    pub verbalizer_avg_words: f64,
    pub metrics: MetricsReport,
    pub predictions: Vec<PredictedTags>,
}

impl ZeroShotReport {
    /// Runs one split through the pipeline and scores it against gold.
    pub fn build(
        dataset: &Dataset,
        split: Split,
        provider: &dyn MaskFillProvider,
        verbalizer: &Verbalizer,
        config: &ZeroShotConfig,
    ) -> Result<ZeroShotReport, ZeroShotError> {
        let tax = dataset.taxonomy();
        let entries: Vec<&Entry> = dataset.entries().iter().filter(|e| e.split == split).collect();
        let run = run_zero_shot(&entries, provider, verbalizer, tax, config)?;
        let gold: Vec<Vec<bool>> = entries.iter().map(|e| e.gold_vector(tax)).collect();
        let metrics = compute_metrics(&run.assignments, &gold, tax);
        let predictions = run
            .predictions
            .iter()
            .map(|p| PredictedTags {
                id: p.id.clone(),
                tags: (0..tax.len()).filter(|&t| p.predicted[t]).map(|t| tax.tags()[t].clone()).collect(),
            })
            .collect();
        Ok(ZeroShotReport {
            provider: provider.name(),
            split,
            entries: entries.len(),
            config: config.clone(),
            verbalizer_avg_words: verbalizer.average_words(),
            metrics,
            predictions,
        })
    }
}
