use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::{Exclusion, Outcome};
use super::generate::{variant_id, CounterfactualFamily, Variant};
use super::{detect_bias_label, generate_variants, BiasAttribute, CounterfactualError, ExclusionRules, SwapLexicon};
use super::{KeywordSpan, LABEL_COUNT};
use crate::corpus::{BiasMeta, Dataset, Entry, Split};

/// Flagged entries of one attribute, each with its generated variants.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasSubset {
    pub attribute: BiasAttribute,
    pub families: Vec<CounterfactualFamily>,
    /// Entry id and reason for every excluded entry (empty when reloaded from a file).
    pub excluded: Vec<(String, Exclusion)>,
    pub not_applicable: usize,
}

impl BiasSubset {
    /// Flagged-entry counts indexed `[label][split]`.
    pub fn counts(&self) -> [[usize; 3]; LABEL_COUNT] {
        let mut counts = [[0; 3]; LABEL_COUNT];
        for f in &self.families {
            let s = Split::ALL.iter().position(|&s| s == f.original.split).expect("known split");
            counts[f.source][s] += 1;
        }
        counts
    }

    pub fn ambiguous_variants(&self) -> usize {
        self.families.iter().flat_map(|f| &f.variants).filter(|v| v.ambiguous).count()
    }

    /// Per-label, per-split table with a `Sum` row, as CSV.
    pub fn counts_table(&self) -> String {
        let counts = self.counts();
        let mut out = String::from("bias_attribute,bias_label,train,validation,test,all\n");
        let mut sum = [0usize; 3];
        for (label, row) in counts.iter().enumerate() {
            for (s, c) in row.iter().enumerate() {
                sum[s] += c;
            }
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.attribute,
                self.attribute.label(label),
                row[0],
                row[1],
                row[2],
                row.iter().sum::<usize>()
            ));
        }
        out.push_str(&format!(
            "{},Sum,{},{},{},{}\n",
            self.attribute,
            sum[0],
            sum[1],
            sum[2],
            sum.iter().sum::<usize>()
        ));
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.families {
            let record = SubsetRecord {
                attribute: self.attribute,
                id: f.original.id.clone(),
                split: f.original.split,
                label: self.attribute.label(f.source).to_string(),
                spans: f.spans.clone(),
                variants: f
                    .variants
                    .iter()
                    .map(|v| VariantRecord {
                        label: self.attribute.label(v.label).to_string(),
                        id: v.entry.id.clone(),
                        text: v.entry.text.clone(),
                        ambiguous: v.ambiguous,
                    })
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&record).expect("subset records serialize"));
            out.push('\n');
        }
        out
    }

    /// Reloads a subset file against the dataset it was flagged from.
    pub fn parse_jsonl(input: &str, dataset: &Dataset) -> Result<Vec<BiasSubset>, CounterfactualError> {
        let by_id: HashMap<&str, &Entry> = dataset.entries().iter().map(|e| (e.id.as_str(), e)).collect();
        let mut subsets: Vec<BiasSubset> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| CounterfactualError::Subset { line: i + 1, reason };
            let rec: SubsetRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            let attribute = rec.attribute;
            let source =
                attribute.label_index(&rec.label).ok_or_else(|| bad(format!("unknown label {:?}", rec.label)))?;
            let entry = by_id
                .get(rec.id.as_str())
                .ok_or_else(|| CounterfactualError::UnknownOriginal { id: rec.id.clone() })?;
            if entry.split != rec.split {
                return Err(bad(format!("split of {:?} does not match the dataset", rec.id)));
            }
            let spans = rec.spans_checked(entry).map_err(bad)?;
            let mut variants = Vec::with_capacity(rec.variants.len());
            for v in rec.variants {
                let label =
                    attribute.label_index(&v.label).ok_or_else(|| bad(format!("unknown label {:?}", v.label)))?;
                if label == source || v.id != variant_id(&rec.id, attribute, label) {
                    return Err(bad(format!("variant {:?} does not belong to {:?}", v.id, rec.id)));
                }
                if v.text.trim().is_empty() {
                    return Err(bad(format!("variant {:?} has empty text", v.id)));
                }
                let mut e = (*entry).clone();
                e.id = v.id;
                e.text = v.text;
                e.bias = Some(BiasMeta { attribute: attribute.to_string(), label: v.label, origin: rec.id.clone() });
                variants.push(Variant { label, entry: e, ambiguous: v.ambiguous });
            }
            variants.sort_by_key(|v| v.label);
            let labels: Vec<usize> = variants.iter().map(|v| v.label).collect();
            let expected: Vec<usize> = (0..LABEL_COUNT).filter(|&l| l != source).collect();
            if labels != expected {
                return Err(bad("a family needs exactly one variant per other label".into()));
            }
            let mut original = (*entry).clone();
            original.bias =
                Some(BiasMeta { attribute: attribute.to_string(), label: rec.label.clone(), origin: rec.id.clone() });
            let family = CounterfactualFamily { original, attribute, source, spans, variants };
            match subsets.iter_mut().find(|s| s.attribute == attribute) {
                Some(s) => s.families.push(family),
                None => subsets.push(BiasSubset {
                    attribute,
                    families: vec![family],
                    excluded: Vec::new(),
                    not_applicable: 0,
                }),
            }
        }
        Ok(subsets)
    }
}

#[derive(Serialize, Deserialize)]
struct SpanRecord {
    start: usize,
    end: usize,
    keyword: String,
}

#[derive(Serialize, Deserialize)]
struct VariantRecord {
    label: String,
    id: String,
    text: String,
    ambiguous: bool,
}

#[derive(Serialize, Deserialize)]
struct SubsetRecord {
    attribute: BiasAttribute,
    id: String,
    split: Split,
    label: String,
    #[serde(with = "span_list")]
    spans: Vec<KeywordSpan>,
    variants: Vec<VariantRecord>,
}

impl SubsetRecord {
    fn spans_checked(&self, entry: &Entry) -> Result<Vec<KeywordSpan>, String> {
        for s in &self.spans {
            if s.start > s.end
                || s.end > entry.text.len()
                || !entry.text.is_char_boundary(s.start)
                || !entry.text.is_char_boundary(s.end)
            {
                return Err(format!("span {}..{} is outside {:?}", s.start, s.end, entry.id));
            }
        }
        Ok(self.spans.clone())
    }
}

mod span_list {
    use super::{KeywordSpan, SpanRecord};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(spans: &[KeywordSpan], s: S) -> Result<S::Ok, S::Error> {
        let recs: Vec<SpanRecord> =
            spans.iter().map(|k| SpanRecord { start: k.start, end: k.end, keyword: k.keyword.clone() }).collect();
        recs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<KeywordSpan>, D::Error> {
        let recs = Vec::<SpanRecord>::deserialize(d)?;
        Ok(recs
            .into_iter()
            .map(|r| KeywordSpan { start: r.start, end: r.end, keyword: r.keyword, rows: Vec::new(), last_word: 0 })
            .collect())
    }
}

/// Flags every entry of the dataset and generates variants for the
/// flagged ones. Detection runs in parallel; results keep entry order.
pub fn flag_corpus(dataset: &Dataset, lexicon: &SwapLexicon, rules: &ExclusionRules) -> BiasSubset {
    let results: Vec<_> = dataset
        .entries()
        .par_iter()
        .map(|entry| {
            let flag = detect_bias_label(entry, lexicon, rules);
            match &flag.outcome {
                Outcome::Flagged { .. } => {
                    let family = generate_variants(entry, &flag, lexicon).expect("flag belongs to this entry");
                    (Some(family), None)
                }
                Outcome::Excluded(reason) => (None, Some((entry.id.clone(), reason.clone()))),
                Outcome::NotApplicable => (None, None),
            }
        })
        .collect();
    let mut subset =
        BiasSubset { attribute: lexicon.attribute, families: Vec::new(), excluded: Vec::new(), not_applicable: 0 };
    for (family, excluded) in results {
        match (family, excluded) {
            (Some(f), _) => subset.families.push(f),
            (None, Some(x)) => subset.excluded.push(x),
            (None, None) => subset.not_applicable += 1,
        }
    }
    subset
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugmentReport {
    pub original_train: usize,
    pub added: Vec<(BiasAttribute, usize)>,
    pub skipped_ambiguous: usize,
    pub augmented_train: usize,
    pub total: usize,
}

/// Appends every unambiguous variant of flagged train entries to the train
/// split. Validation and test entries are untouched.
pub fn augment_training_set(
    dataset: &Dataset,
    subsets: &[BiasSubset],
) -> Result<(Dataset, AugmentReport), CounterfactualError> {
    let original_train = dataset.split_len(Split::Train);
    let mut entries: Vec<Entry> = dataset.entries().to_vec();
    let mut added = Vec::new();
    let mut skipped = 0;
    for subset in subsets {
        let mut n = 0;
        for family in subset.families.iter().filter(|f| f.original.split == Split::Train) {
            if dataset.get(&family.original.id).is_none() {
                return Err(CounterfactualError::UnknownOriginal { id: family.original.id.clone() });
            }
            for v in &family.variants {
                if v.ambiguous {
                    skipped += 1;
                } else {
                    entries.push(v.entry.clone());
                    n += 1;
                }
            }
        }
        added.push((subset.attribute, n));
    }
    let augmented = Dataset::new(dataset.shared_taxonomy(), entries, format!("{} +cda", dataset.provenance))?;
    let report = AugmentReport {
        original_train,
        added,
        skipped_ambiguous: skipped,
        augmented_train: augmented.split_len(Split::Train),
        total: augmented.len(),
    };
    Ok((augmented, report))
}

/// One aligned family: `forms[m]` is the form carrying bias label `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFamily {
    pub origin: String,
    pub forms: [Entry; LABEL_COUNT],
}

/// Test-split families with every form present; `X_m` is `forms[m]` over
/// all families, so every `X_m` has the same size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedAuditSet {
    pub attribute: BiasAttribute,
    pub families: Vec<AuditFamily>,
    pub dropped_ambiguous: usize,
}

impl PairedAuditSet {
    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    /// All forms, family-major then label order.
    pub fn all_forms(&self) -> impl Iterator<Item = &Entry> {
        self.families.iter().flat_map(|f| f.forms.iter())
    }

    pub fn forms_with_label(&self, label: usize) -> impl Iterator<Item = &Entry> {
        self.families.iter().map(move |f| &f.forms[label])
    }
}

pub fn build_paired_test_set(subset: &BiasSubset) -> PairedAuditSet {
    let mut families = Vec::new();
    let mut dropped = 0;
    for f in subset.families.iter().filter(|f| f.original.split == Split::Test) {
        if f.is_ambiguous() {
            dropped += 1;
            continue;
        }
        let forms = std::array::from_fn(|m| f.form(m).clone());
        families.push(AuditFamily { origin: f.original.id.clone(), forms });
    }
    PairedAuditSet { attribute: subset.attribute, families, dropped_ambiguous: dropped }
}
