use super::{Aggregation, Distribution, ZeroShotError};
use crate::corpus::TagTaxonomy;

/// Words standing in for each tag, in taxonomy tag order.
#[derive(Debug, Clone, PartialEq)]
pub struct Verbalizer {
    pub tags: Vec<String>,
    pub words: Vec<Vec<String>>,
}

const BUILTIN: &str = include_str!("../../data/verbalizer.csv");

impl Verbalizer {
    /// The bundled word lists for the default taxonomy.
    pub fn builtin(taxonomy: &TagTaxonomy) -> Result<Verbalizer, ZeroShotError> {
        Verbalizer::parse_csv(BUILTIN, taxonomy)
    }

    /// Reads `tag,word1|word2|...` rows (header optional). Every taxonomy tag
    /// needs a row; words are single lowercase tokens.
    pub fn parse_csv(input: &str, taxonomy: &TagTaxonomy) -> Result<Verbalizer, ZeroShotError> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input.as_bytes());
        let mut words: Vec<Option<Vec<String>>> = vec![None; taxonomy.len()];
        for (i, rec) in r.records().enumerate() {
            let line = i + 1;
            let bad = |reason: String| ZeroShotError::Verbalizer { line, reason };
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if line == 1 && &rec[0] == "tag" {
                continue;
            }
            if rec.len() != 2 {
                return Err(bad("expected tag,words".into()));
            }
            let tag = taxonomy.tag_index(&rec[0]).ok_or_else(|| bad(format!("unknown tag {:?}", &rec[0])))?;
            let list: Vec<String> = rec[1].split('|').map(|w| w.trim().to_string()).collect();
            if list.iter().any(|w| w.is_empty() || w.chars().any(char::is_whitespace) || *w != w.to_lowercase()) {
                return Err(bad(format!("words for {:?} must be non-empty lowercase single tokens", &rec[0])));
            }
            if words[tag].replace(list).is_some() {
                return Err(bad(format!("duplicate tag {:?}", &rec[0])));
            }
        }
        let words = words
            .into_iter()
            .zip(taxonomy.tags())
            .map(|(w, t)| w.ok_or_else(|| ZeroShotError::MissingTag(t.clone())))
            .collect::<Result<_, _>>()?;
        Ok(Verbalizer { tags: taxonomy.tags().to_vec(), words })
    }

    pub fn average_words(&self) -> f64 {
        self.words.iter().map(Vec::len).sum::<usize>() as f64 / self.words.len().max(1) as f64
    }

    /// Every distinct word, sorted.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut v: Vec<String> = self.words.iter().flatten().cloned().collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Per-tag score from a mask-fill distribution; absent words count as 0.
pub fn score_labels(dist: &Distribution, verbalizer: &Verbalizer, aggregation: Aggregation) -> Vec<f64> {
    verbalizer
        .words
        .iter()
        .map(|ws| {
            let probs = ws.iter().map(|w| dist.get(w).copied().unwrap_or(0.0));
            match aggregation {
                Aggregation::Max => probs.fold(0.0, f64::max),
                Aggregation::Mean => probs.sum::<f64>() / ws.len() as f64,
            }
        })
        .collect()
}
