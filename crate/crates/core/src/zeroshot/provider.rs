use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use super::{Verbalizer, ZeroShotError};
use crate::text::lower_words;

/// Word to probability; words not listed have probability 0.
pub type Distribution = BTreeMap<String, f64>;

/// Source of mask-fill distributions. Implementations must return the same
/// distribution for the same entry and prompt.
pub trait MaskFillProvider: Sync {
    fn fill(&self, entry_id: &str, prompt: &str) -> Result<Distribution, ZeroShotError>;

    fn name(&self) -> String;
}

/// Precomputed distributions keyed by entry id, from JSONL records
/// `{"id": ..., "probs": {word: p}}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileProvider {
    records: HashMap<String, Distribution>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    probs: BTreeMap<String, f64>,
}

impl FileProvider {
    pub fn parse_jsonl(input: &str) -> Result<FileProvider, ZeroShotError> {
        let mut records = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| ZeroShotError::ProviderFile { line: i + 1, reason };
            let rec: Record = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            if rec.probs.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(bad("probabilities must be finite and non-negative".into()));
            }
            let probs = rec.probs.into_iter().map(|(w, p)| (w.to_lowercase(), p)).collect();
            if records.insert(rec.id.clone(), probs).is_some() {
                return Err(bad(format!("duplicate id {:?}", rec.id)));
            }
        }
        Ok(FileProvider { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl MaskFillProvider for FileProvider {
    fn fill(&self, entry_id: &str, _prompt: &str) -> Result<Distribution, ZeroShotError> {
        self.records.get(entry_id).cloned().ok_or_else(|| ZeroShotError::ProviderMissing { id: entry_id.into() })
    }

    fn name(&self) -> String {
        "file".into()
    }
}

/// Keyword-overlap stand-in for a masked language model: each vocabulary
/// word gets (occurrences in the prompt) / (prompt word count).
#[derive(Debug, Clone, PartialEq)]
pub struct StubProvider {
    vocabulary: Vec<(String, Vec<String>)>,
}

impl StubProvider {
    pub fn new(verbalizer: &Verbalizer) -> StubProvider {
        StubProvider {
            vocabulary: verbalizer
                .vocabulary()
                .into_iter()
                .map(|w| {
                    let parts = lower_words(&w);
                    (w, parts)
                })
                .collect(),
        }
    }
}

impl MaskFillProvider for StubProvider {
    fn fill(&self, _entry_id: &str, prompt: &str) -> Result<Distribution, ZeroShotError> {
        let tokens = lower_words(prompt);
        let mut dist = Distribution::new();
        if tokens.is_empty() {
            return Ok(dist);
        }
        for (word, parts) in &self.vocabulary {
            if parts.is_empty() || parts.len() > tokens.len() {
                continue;
            }
            let hits = tokens.windows(parts.len()).filter(|w| *w == parts.as_slice()).count();
            if hits > 0 {
                dist.insert(word.clone(), hits as f64 / tokens.len() as f64);
            }
        }
        Ok(dist)
    }

    fn name(&self) -> String {
        "stub".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::default_taxonomy;

    #[test]
    fn file_records() {
        let p = FileProvider::parse_jsonl("{\"id\":\"a\",\"probs\":{\"Farm\":0.2}}\n\n{\"id\":\"b\",\"probs\":{}}\n")
            .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.fill("a", "").unwrap()["farm"], 0.2);
        assert!(matches!(p.fill("zz", ""), Err(ZeroShotError::ProviderMissing { .. })));
        assert!(FileProvider::parse_jsonl("{\"id\":\"a\",\"probs\":{\"x\":-1}}").is_err());
        assert!(FileProvider::parse_jsonl("{\"id\":\"a\",\"probs\":{}}\n{\"id\":\"a\",\"probs\":{}}").is_err());
        assert!(FileProvider::parse_jsonl("[1]").is_err());
    }

    #[test]
    fn stub_counts_overlap() {
        let v = Verbalizer::builtin(&default_taxonomy()).unwrap();
        let stub = StubProvider::new(&v);
        let d = stub.fill("x", "Water and water pumps. It is about [MASK]").unwrap();
        // 8 prompt words: water, and, water, pumps, it, is, about, mask
        assert_eq!(d["water"], 2.0 / 8.0);
        assert!(!d.contains_key("pumps"));
        assert_eq!(stub.fill("x", "").unwrap(), Distribution::new());
        let covid = stub.fill("x", "covid-19 cases rose").unwrap();
        assert_eq!(covid["covid-19"], 0.25);
    }
}
