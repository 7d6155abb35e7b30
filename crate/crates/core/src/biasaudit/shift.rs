use std::collections::HashMap;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use super::AuditError;
use crate::classifier::PredictionMatrix;
use crate::corpus::TagTaxonomy;
use crate::counterfactual::{BiasAttribute, PairedAuditSet};

/// Probability shift from form `m` to form `n`, in percentage points.
pub fn p_shift(p_n: f64, p_m: f64) -> f64 {
    (p_n - p_m) * 100.0
}

/// Median with the midpoint convention for even counts; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

/// Which tags enter the overall score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagSet {
    /// Tags of the three single-level groups.
    SingleLevel,
    All,
}

impl TagSet {
    pub fn parse(s: &str) -> Option<TagSet> {
        match s {
            "single-level" => Some(TagSet::SingleLevel),
            "all" | "all-79" => Some(TagSet::All),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TagSet::SingleLevel => "single-level",
            TagSet::All => "all",
        }
    }

    pub fn indices(self, taxonomy: &TagTaxonomy) -> Vec<usize> {
        match self {
            TagSet::SingleLevel => taxonomy.single_level_indices(),
            TagSet::All => (0..taxonomy.len()).collect(),
        }
    }
}

/// Row lookup for every form of the audit set.
pub(crate) fn form_rows(preds: &PredictionMatrix, audit: &PairedAuditSet) -> Result<Vec<[usize; 3]>, AuditError> {
    let index: HashMap<&str, usize> = preds.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    audit
        .families
        .iter()
        .map(|f| {
            let mut rows = [0; 3];
            for (m, form) in f.forms.iter().enumerate() {
                rows[m] = *index
                    .get(form.id.as_str())
                    .ok_or_else(|| AuditError::MissingPrediction { id: form.id.clone() })?;
            }
            Ok(rows)
        })
        .collect()
}

/// Median over families of `p_shift(P(x_n, t), P(x_m, t))`; `None` for an
/// empty audit set.
pub fn tag_shift(
    preds: &PredictionMatrix,
    audit: &PairedAuditSet,
    tag: usize,
    (m, n): (usize, usize),
) -> Result<Option<f64>, AuditError> {
    let rows = form_rows(preds, audit)?;
    let shifts: Vec<f64> = rows.iter().map(|r| p_shift(preds.get(r[n], tag), preds.get(r[m], tag))).collect();
    Ok(median(&shifts))
}

/// Tag-Shift for each tag of the chosen set and each of the six transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct TagShiftMatrix {
    pub attribute: BiasAttribute,
    pub tags: Vec<String>,
    pub transitions: Vec<(usize, usize)>,
    /// Tag-major; `None` marks a not-computable cell.
    pub cells: Vec<Option<f64>>,
    pub families: usize,
    pub provenance: String,
}

impl TagShiftMatrix {
    pub fn get(&self, tag: usize, transition: usize) -> Option<f64> {
        self.cells[tag * self.transitions.len() + transition]
    }

    pub fn transition_names(&self) -> Vec<String> {
        self.transitions.iter().map(|&t| self.attribute.transition_name(t)).collect()
    }

    /// Rebuilds a matrix from its JSON form (the inverse of `Serialize`).
    pub fn from_value(v: &serde_json::Value) -> Result<TagShiftMatrix, AuditError> {
        let bad = |reason: &str| AuditError::MalformedMatrix(reason.to_string());
        let attribute = v["attribute"]
            .as_str()
            .and_then(BiasAttribute::parse)
            .ok_or_else(|| bad("missing or unknown attribute"))?;
        let families = v["families"].as_u64().ok_or_else(|| bad("missing families count"))? as usize;
        let provenance = v["provenance"].as_str().unwrap_or_default().to_string();
        let names = v["transitions"].as_array().ok_or_else(|| bad("missing transitions"))?;
        let mut transitions = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_str().ok_or_else(|| bad("transition name is not a string"))?;
            let t = attribute
                .transitions()
                .into_iter()
                .find(|&t| attribute.transition_name(t) == name)
                .ok_or_else(|| AuditError::MalformedMatrix(format!("unknown transition {name:?}")))?;
            transitions.push(t);
        }
        let rows = v["rows"].as_array().ok_or_else(|| bad("missing rows"))?;
        let mut tags = Vec::with_capacity(rows.len());
        let mut cells = Vec::with_capacity(rows.len() * transitions.len());
        for row in rows {
            tags.push(row["tag"].as_str().ok_or_else(|| bad("row without a tag"))?.to_string());
            for name in names {
                let cell = &row[name.as_str().unwrap_or_default()];
                cells.push(match cell {
                    serde_json::Value::Null => None,
                    c => Some(c.as_f64().ok_or_else(|| bad("cell is neither a number nor null"))?),
                });
            }
        }
        Ok(TagShiftMatrix { attribute, tags, transitions, cells, families, provenance })
    }
}

struct Row<'a>(&'a TagShiftMatrix, usize);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let Row(m, t) = self;
        let mut map = s.serialize_map(Some(m.transitions.len() + 1))?;
        map.serialize_entry("tag", &m.tags[*t])?;
        for (c, name) in m.transition_names().iter().enumerate() {
            map.serialize_entry(name, &m.get(*t, c))?;
        }
        map.end()
    }
}

impl Serialize for TagShiftMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Row> = (0..self.tags.len()).map(|t| Row(self, t)).collect();
        let mut map = s.serialize_map(Some(5))?;
        map.serialize_entry("attribute", &self.attribute)?;
        map.serialize_entry("families", &self.families)?;
        map.serialize_entry("transitions", &self.transition_names())?;
        map.serialize_entry("provenance", &self.provenance)?;
        map.serialize_entry("rows", &rows)?;
        map.end()
    }
}

/// Builds the full matrix over `tag_columns` (prediction column indices).
pub fn tag_shift_matrix(
    preds: &PredictionMatrix,
    audit: &PairedAuditSet,
    tag_columns: &[usize],
) -> Result<TagShiftMatrix, AuditError> {
    let rows = form_rows(preds, audit)?;
    let transitions = audit.attribute.transitions();
    let mut cells = Vec::with_capacity(tag_columns.len() * transitions.len());
    let mut shifts = Vec::with_capacity(rows.len());
    for &t in tag_columns {
        for &(m, n) in &transitions {
            shifts.clear();
            shifts.extend(rows.iter().map(|r| p_shift(preds.get(r[n], t), preds.get(r[m], t))));
            cells.push(median(&shifts));
        }
    }
    Ok(TagShiftMatrix {
        attribute: audit.attribute,
        tags: tag_columns.iter().map(|&t| preds.tags[t].clone()).collect(),
        transitions,
        cells,
        families: audit.len(),
        provenance: preds.provenance.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverallShiftReport {
    pub attribute: BiasAttribute,
    pub overall_shift: f64,
    pub tag_count: usize,
    pub transition_count: usize,
    pub matrix: TagShiftMatrix,
}

/// Mean over transitions of the summed absolute Tag-Shift over tags.
/// Any not-computable cell is an error.
pub fn overall_shift(matrix: &TagShiftMatrix) -> Result<OverallShiftReport, AuditError> {
    let c = matrix.transitions.len();
    let mut total = 0.0;
    for (ti, _) in matrix.transitions.iter().enumerate() {
        let mut per_transition = 0.0;
        for (t, tag) in matrix.tags.iter().enumerate() {
            let v = matrix.get(t, ti).ok_or_else(|| AuditError::NotComputable {
                tag: tag.clone(),
                transition: matrix.attribute.transition_name(matrix.transitions[ti]),
            })?;
            per_transition += v.abs();
        }
        total += per_transition;
    }
    Ok(OverallShiftReport {
        attribute: matrix.attribute,
        overall_shift: if c == 0 { 0.0 } else { total / c as f64 },
        tag_count: matrix.tags.len(),
        transition_count: c,
        matrix: matrix.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_shift_examples() {
        assert_eq!(p_shift(0.4, 0.4), 0.0);
        assert!((p_shift(0.30, 0.25) - 5.0).abs() < 1e-12);
        assert_eq!(p_shift(0.0, 1.0), -100.0);
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[-2.0, 1.0, 5.0]), Some(1.0));
        assert_eq!(median(&[-1.0, 3.0]), Some(1.0));
        assert_eq!(median(&[]), None);
    }

    fn constant_matrix(tags: usize, value: Option<f64>) -> TagShiftMatrix {
        let transitions = BiasAttribute::Gender.transitions();
        TagShiftMatrix {
            attribute: BiasAttribute::Gender,
            tags: (0..tags).map(|i| format!("t{i}")).collect(),
            cells: vec![value; tags * transitions.len()],
            transitions,
            families: 1,
            provenance: String::new(),
        }
    }

    #[test]
    fn overall_examples() {
        assert_eq!(overall_shift(&constant_matrix(3, Some(0.0))).unwrap().overall_shift, 0.0);
        assert_eq!(overall_shift(&constant_matrix(2, Some(1.0))).unwrap().overall_shift, 2.0);
        assert!(matches!(overall_shift(&constant_matrix(2, None)), Err(AuditError::NotComputable { .. })));
    }

    #[test]
    fn json_marks_missing_cells_null() {
        let mut m = constant_matrix(1, Some(1.5));
        m.cells[1] = None;
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["rows"][0]["female->male"], 1.5);
        assert!(v["rows"][0]["female->neutral"].is_null());
        assert_eq!(v["transitions"].as_array().unwrap().len(), 6);
        assert_eq!(TagShiftMatrix::from_value(&v).unwrap(), m);
    }

    #[test]
    fn from_value_rejects_bad_shapes() {
        let mut v = serde_json::to_value(constant_matrix(1, Some(0.5))).unwrap();
        v["rows"][0]["male->female"] = serde_json::json!("x");
        assert!(TagShiftMatrix::from_value(&v).is_err());
        v["transitions"][0] = serde_json::json!("female->syria");
        assert!(TagShiftMatrix::from_value(&v).is_err());
        assert!(TagShiftMatrix::from_value(&serde_json::json!({})).is_err());
    }
}
