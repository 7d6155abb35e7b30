use std::fmt;

use serde::{Deserialize, Serialize};

use super::CounterfactualError;
use crate::text::lower_words;

/// A protected attribute with its three bias labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasAttribute {
    Gender,
    Country,
}

pub const LABEL_COUNT: usize = 3;

impl BiasAttribute {
    pub const ALL: [BiasAttribute; 2] = [BiasAttribute::Gender, BiasAttribute::Country];

    pub fn as_str(self) -> &'static str {
        match self {
            BiasAttribute::Gender => "gender",
            BiasAttribute::Country => "country",
        }
    }

    pub fn parse(s: &str) -> Option<BiasAttribute> {
        BiasAttribute::ALL.into_iter().find(|a| a.as_str() == s)
    }

    pub fn labels(self) -> [&'static str; LABEL_COUNT] {
        match self {
            BiasAttribute::Gender => ["female", "male", "neutral"],
            BiasAttribute::Country => ["venezuela", "syria", "canada"],
        }
    }

    pub fn label_index(self, label: &str) -> Option<usize> {
        self.labels().iter().position(|l| *l == label)
    }

    pub fn label(self, index: usize) -> &'static str {
        self.labels()[index]
    }

    /// Ordered transitions `m → n`, `m ≠ n`, source-major.
    pub fn transitions(self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(LABEL_COUNT * (LABEL_COUNT - 1));
        for m in 0..LABEL_COUNT {
            for n in 0..LABEL_COUNT {
                if m != n {
                    out.push((m, n));
                }
            }
        }
        out
    }

    pub fn transition_name(self, (m, n): (usize, usize)) -> String {
        format!("{}->{}", self.label(m), self.label(n))
    }
}

impl fmt::Display for BiasAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grammatical role qualifier for rows sharing a surface form ("her").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Possessive,
    Object,
}

/// One aligned keyword tuple. Each slot lists candidate surface forms in
/// priority order; rewriting always emits the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconRow {
    pub slots: [Vec<String>; LABEL_COUNT],
    pub role: Option<Role>,
}

impl LexiconRow {
    pub fn primary(&self, label: usize) -> &str {
        &self.slots[label][0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapLexicon {
    pub attribute: BiasAttribute,
    pub rows: Vec<LexiconRow>,
    /// Labels an original entry may be flagged with.
    pub sources: [bool; LABEL_COUNT],
}

/// A keyword phrase as lowercase words, with the rows it occurs in.
#[derive(Debug, Clone)]
pub(crate) struct KeywordEntry {
    pub words: Vec<String>,
    pub label: usize,
    pub rows: Vec<usize>,
}

impl SwapLexicon {
    pub fn new(
        attribute: BiasAttribute,
        rows: Vec<LexiconRow>,
        sources: [bool; LABEL_COUNT],
    ) -> Result<SwapLexicon, CounterfactualError> {
        if rows.is_empty() {
            return Err(CounterfactualError::Lexicon("lexicon has no rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            for (label, slot) in row.slots.iter().enumerate() {
                if slot.is_empty() || slot.iter().any(|w| lower_words(w).is_empty()) {
                    return Err(CounterfactualError::Lexicon(format!(
                        "row {} has an empty {} slot",
                        i + 1,
                        attribute.label(label)
                    )));
                }
                if slot.iter().any(|w| *w != w.to_lowercase()) {
                    return Err(CounterfactualError::Lexicon(format!("row {} is not lowercase", i + 1)));
                }
            }
        }
        Ok(SwapLexicon { attribute, rows, sources })
    }

    /// Keyword phrases grouped by (label, phrase) with all rows they appear in.
    pub(crate) fn keyword_entries(&self) -> Vec<KeywordEntry> {
        let mut out: Vec<KeywordEntry> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (label, slot) in row.slots.iter().enumerate() {
                for surface in slot {
                    let words = lower_words(surface);
                    match out.iter_mut().find(|k| k.label == label && k.words == words) {
                        Some(k) => {
                            if !k.rows.contains(&r) {
                                k.rows.push(r);
                            }
                        }
                        None => out.push(KeywordEntry { words, label, rows: vec![r] }),
                    }
                }
            }
        }
        out
    }

    /// True when rewriting this row's label-`a` form to label `b` and back
    /// always returns the same form, whichever row the rewrite goes through.
    pub fn row_is_bijective(&self, row: usize, a: usize, b: usize) -> bool {
        let fa = self.rows[row].primary(a);
        self.rows.iter().filter(|s| s.slots[a].iter().any(|w| w == fa)).all(|s| {
            let fb = s.primary(b);
            self.rows.iter().filter(|t| t.slots[b].iter().any(|w| w == fb)).all(|t| t.primary(a) == fa)
        })
    }

    pub fn default_gender() -> SwapLexicon {
        parse_gender_lexicon(include_str!("../../data/gender_lexicon.csv")).expect("bundled gender lexicon is valid")
    }

    pub fn default_country() -> SwapLexicon {
        parse_country_lexicon(include_str!("../../data/country_lexicon.csv")).expect("bundled country lexicon is valid")
    }

    pub fn default_for(attribute: BiasAttribute) -> SwapLexicon {
        match attribute {
            BiasAttribute::Gender => SwapLexicon::default_gender(),
            BiasAttribute::Country => SwapLexicon::default_country(),
        }
    }

    pub fn parse(attribute: BiasAttribute, input: &str) -> Result<SwapLexicon, CounterfactualError> {
        match attribute {
            BiasAttribute::Gender => parse_gender_lexicon(input),
            BiasAttribute::Country => parse_country_lexicon(input),
        }
    }
}

fn csv_records(input: &str) -> Result<Vec<csv::StringRecord>, CounterfactualError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input.as_bytes());
    reader.records().collect::<Result<Vec<_>, _>>().map_err(|e| CounterfactualError::Lexicon(e.to_string()))
}

fn options(cell: &str) -> Vec<String> {
    cell.split('|').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Parses `female,male,neutral,role` rows; multi-option cells use `|`.
pub fn parse_gender_lexicon(input: &str) -> Result<SwapLexicon, CounterfactualError> {
    let mut rows = Vec::new();
    for (i, rec) in csv_records(input)?.iter().enumerate() {
        if rec.len() < 3 || rec.len() > 4 {
            return Err(CounterfactualError::Lexicon(format!("row {}: expected 3 or 4 columns", i + 1)));
        }
        let role = match rec.get(3).unwrap_or("") {
            "" => None,
            "possessive" => Some(Role::Possessive),
            "object" => Some(Role::Object),
            other => return Err(CounterfactualError::Lexicon(format!("row {}: unknown role {other:?}", i + 1))),
        };
        rows.push(LexiconRow { slots: [options(&rec[0]), options(&rec[1]), options(&rec[2])], role });
    }
    SwapLexicon::new(BiasAttribute::Gender, rows, [true; LABEL_COUNT])
}

/// Parses `source,targets` rows. The source cell is `label:surface` or a
/// bare surface naming its label; targets are `|`-separated surfaces for
/// the remaining labels in label order. Rows sharing no source are merged
/// into one aligned row per distinct target set.
pub fn parse_country_lexicon(input: &str) -> Result<SwapLexicon, CounterfactualError> {
    let attribute = BiasAttribute::Country;
    let mut sources = [false; LABEL_COUNT];
    let mut rows: Vec<LexiconRow> = Vec::new();
    for (i, rec) in csv_records(input)?.iter().enumerate() {
        let err = |msg: &str| CounterfactualError::Lexicon(format!("row {}: {msg}", i + 1));
        if rec.len() != 2 {
            return Err(err("expected 2 columns"));
        }
        let (label_name, surface) = match rec[0].split_once(':') {
            Some((l, s)) => (l.trim().to_lowercase(), s.trim().to_lowercase()),
            None => (rec[0].to_lowercase(), rec[0].to_lowercase()),
        };
        let source = attribute.label_index(&label_name).ok_or_else(|| err("source is not a country label"))?;
        let targets = options(&rec[1].to_lowercase());
        if targets.len() != LABEL_COUNT - 1 {
            return Err(err("expected one target per remaining label"));
        }
        sources[source] = true;
        let mut slots: [Vec<String>; LABEL_COUNT] = Default::default();
        slots[source] = vec![surface];
        let mut it = targets.into_iter();
        for (label, slot) in slots.iter_mut().enumerate() {
            if label != source {
                *slot = vec![it.next().expect("length checked")];
            }
        }
        // Merge with an existing row that agrees on every primary form.
        let merged = rows.iter_mut().find(|r| (0..LABEL_COUNT).all(|l| r.slots[l][0] == slots[l][0]));
        if merged.is_none() {
            rows.push(LexiconRow { slots, role: None });
        }
    }
    SwapLexicon::new(attribute, rows, sources)
}
