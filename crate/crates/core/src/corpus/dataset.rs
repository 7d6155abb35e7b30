use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CorpusError, GroupName, TagTaxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gold labels: task group → tags, tags kept in canonical taxonomy order.
pub type Labels = BTreeMap<GroupName, Vec<String>>;

/// Bias annotation attached by the counterfactual module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasMeta {
    pub attribute: String,
    pub label: String,
    /// Id of the original entry this form was derived from (itself for originals).
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub text: String,
    #[serde(rename = "lang", default = "default_lang")]
    pub language: String,
    pub split: Split,
    #[serde(default)]
    pub labels: Labels,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasMeta>,
}

fn default_lang() -> String {
    "en".to_string()
}

impl Entry {
    pub fn new(id: impl Into<String>, text: impl Into<String>, split: Split) -> Entry {
        Entry { id: id.into(), text: text.into(), language: default_lang(), split, labels: Labels::new(), bias: None }
    }

    pub fn with_labels(mut self, group: GroupName, tags: &[&str]) -> Entry {
        self.labels.insert(group, tags.iter().map(|t| t.to_string()).collect());
        self
    }

    /// 0/1 gold indicator per taxonomy column.
    pub fn gold_vector(&self, taxonomy: &TagTaxonomy) -> Vec<bool> {
        let mut gold = vec![false; taxonomy.len()];
        for tags in self.labels.values() {
            for tag in tags {
                if let Some(i) = taxonomy.tag_index(tag) {
                    gold[i] = true;
                }
            }
        }
        gold
    }
}

/// Raw record as it appears on disk, before taxonomy validation.
#[derive(Deserialize)]
struct RawEntry {
    id: String,
    text: String,
    #[serde(default = "default_lang")]
    lang: String,
    split: Split,
    #[serde(default)]
    labels: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    bias: Option<BiasMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    taxonomy: Arc<TagTaxonomy>,
    entries: Vec<Entry>,
    pub provenance: String,
}

impl Dataset {
    /// Validates every entry against the taxonomy. Labels are normalized
    /// to canonical tag order; duplicate tags within a group collapse and
    /// groups with no tags are dropped.
    pub fn new(
        taxonomy: Arc<TagTaxonomy>,
        entries: Vec<Entry>,
        provenance: impl Into<String>,
    ) -> Result<Dataset, CorpusError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(entries.len());
        for mut entry in entries {
            if !seen.insert(entry.id.clone()) {
                return Err(CorpusError::DuplicateId { id: entry.id });
            }
            validate_entry(&taxonomy, &mut entry)?;
            out.push(entry);
        }
        Ok(Dataset { taxonomy, entries: out, provenance: provenance.into() })
    }

    pub fn empty(taxonomy: Arc<TagTaxonomy>) -> Dataset {
        Dataset { taxonomy, entries: Vec::new(), provenance: String::new() }
    }

    pub fn taxonomy(&self) -> &TagTaxonomy {
        &self.taxonomy
    }

    pub fn shared_taxonomy(&self) -> Arc<TagTaxonomy> {
        Arc::clone(&self.taxonomy)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn split_view(&self, split: Split) -> Dataset {
        Dataset {
            taxonomy: Arc::clone(&self.taxonomy),
            entries: self.entries.iter().filter(|e| e.split == split).cloned().collect(),
            provenance: format!("{} [{split}]", self.provenance),
        }
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    pub fn require_splits(&self, splits: &[Split]) -> Result<(), CorpusError> {
        for &split in splits {
            if self.split_len(split) == 0 {
                return Err(CorpusError::EmptySplit(split));
            }
        }
        Ok(())
    }

    /// Serializes to the line-delimited entry format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("entries serialize"));
            out.push('\n');
        }
        out
    }

    /// Consumes the dataset; used by builders that need to append entries.
    pub fn into_entries(self) -> Vec<Entry> {
        self.entries
    }
}

fn validate_entry(taxonomy: &TagTaxonomy, entry: &mut Entry) -> Result<(), CorpusError> {
    if entry.text.trim().is_empty() {
        return Err(CorpusError::EmptyText { id: entry.id.clone() });
    }
    let mut normalized = Labels::new();
    for (group, tags) in &entry.labels {
        let mut idx = Vec::with_capacity(tags.len());
        for tag in tags {
            match taxonomy.tag_index(tag) {
                Some(i) if taxonomy.group_of(i) == *group => idx.push(i),
                _ => {
                    return Err(CorpusError::UnknownTag {
                        id: entry.id.clone(),
                        group: group.to_string(),
                        tag: tag.clone(),
                    })
                }
            }
        }
        idx.sort_unstable();
        idx.dedup();
        if !idx.is_empty() {
            normalized.insert(*group, idx.into_iter().map(|i| taxonomy.tags()[i].clone()).collect());
        }
    }
    entry.labels = normalized;
    Ok(())
}

/// Parses line-delimited entry records. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn parse_dataset(input: &str, taxonomy: Arc<TagTaxonomy>, provenance: &str) -> Result<Dataset, CorpusError> {
    let mut entries = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEntry =
            serde_json::from_str(line).map_err(|e| CorpusError::Malformed { line: line_no, reason: e.to_string() })?;
        let mut labels = Labels::new();
        for (group, tags) in raw.labels {
            let name = GroupName::parse(&group)
                .ok_or_else(|| CorpusError::UnknownGroup { id: raw.id.clone(), group: group.clone() })?;
            labels.insert(name, tags);
        }
        entries.push(Entry {
            id: raw.id,
            text: raw.text,
            language: raw.lang,
            split: raw.split,
            labels,
            bias: raw.bias,
        });
    }
    Dataset::new(taxonomy, entries, provenance)
}

pub fn load_dataset(path: &Path, taxonomy: Arc<TagTaxonomy>) -> Result<Dataset, CorpusError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CorpusError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_dataset(&text, taxonomy, &path.display().to_string())
}
