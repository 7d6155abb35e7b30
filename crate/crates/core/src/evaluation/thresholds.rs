use rayon::prelude::*;

use super::EvalError;
use crate::classifier::PredictionMatrix;

pub const GRID_POINTS: usize = 20;

/// Evenly spaced candidates from the column's min to its max, both
/// inclusive. A constant column yields that single value.
pub fn threshold_candidates(probs: &[f64]) -> Vec<f64> {
    let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if probs.is_empty() {
        return vec![0.5];
    }
    if lo == hi {
        return vec![lo];
    }
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS).map(|i| if i == GRID_POINTS - 1 { hi } else { lo + i as f64 * step }).collect()
}

/// F1 of the rule `p >= threshold` against `gold`, 0 when undefined.
pub fn f1_at(probs: &[f64], gold: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (p, g) in probs.iter().zip(gold) {
        match (*p >= threshold, *g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagScan {
    pub candidates: Vec<f64>,
    pub f1: Vec<f64>,
    pub chosen: usize,
}

impl TagScan {
    pub fn threshold(&self) -> f64 {
        self.candidates[self.chosen]
    }
}

/// Scans the grid for one tag; the first (lowest) best candidate wins.
pub fn scan_tag(probs: &[f64], gold: &[bool]) -> TagScan {
    let candidates = threshold_candidates(probs);
    let f1: Vec<f64> = candidates.iter().map(|&c| f1_at(probs, gold, c)).collect();
    let mut chosen = 0;
    for (i, v) in f1.iter().enumerate() {
        if *v > f1[chosen] {
            chosen = i;
        }
    }
    TagScan { candidates, f1, chosen }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub tags: Vec<String>,
    pub thresholds: Vec<f64>,
    pub provenance: String,
}

impl ThresholdTable {
    pub fn uniform(tags: &[String], value: f64) -> ThresholdTable {
        ThresholdTable { tags: tags.to_vec(), thresholds: vec![value; tags.len()], provenance: String::new() }
    }

    pub fn get(&self, tag: &str) -> Option<f64> {
        self.tags.iter().position(|t| t == tag).map(|i| self.thresholds[i])
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["tag", "threshold"]).expect("in-memory write");
        for (t, v) in self.tags.iter().zip(&self.thresholds) {
            w.write_record([t.as_str(), &format!("{v:?}")]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Reads a `tag,threshold` CSV whose tags must be exactly `tags` (any
    /// order). Values outside [0, 1] are clamped.
    pub fn parse_csv(input: &str, tags: &[String]) -> Result<ThresholdTable, EvalError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input.as_bytes());
        let mut values: Vec<Option<f64>> = vec![None; tags.len()];
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let bad = |reason: String| EvalError::Malformed { line, reason };
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 2 {
                return Err(bad("expected tag,threshold".into()));
            }
            let col =
                tags.iter().position(|t| t == &rec[0]).ok_or_else(|| bad(format!("unknown tag {:?}", &rec[0])))?;
            let v: f64 = rec[1].trim().parse().map_err(|_| bad(format!("not a number: {:?}", &rec[1])))?;
            if v.is_nan() {
                return Err(bad("threshold is NaN".into()));
            }
            if values[col].replace(v.clamp(0.0, 1.0)).is_some() {
                return Err(bad(format!("duplicate tag {:?}", &rec[0])));
            }
        }
        let thresholds = values
            .into_iter()
            .zip(tags)
            .map(|(v, t)| v.ok_or_else(|| EvalError::ColumnMismatch(format!("no threshold for {t:?}"))))
            .collect::<Result<_, _>>()?;
        Ok(ThresholdTable { tags: tags.to_vec(), thresholds, provenance: String::new() })
    }
}

/// Tunes every tag independently on validation predictions.
pub fn tune_thresholds(preds: &PredictionMatrix, gold: &[Vec<bool>]) -> ThresholdTable {
    assert_eq!(preds.n_rows(), gold.len(), "rows align with gold");
    let thresholds = (0..preds.n_tags())
        .into_par_iter()
        .map(|t| {
            let g: Vec<bool> = gold.iter().map(|row| row[t]).collect();
            scan_tag(&preds.column(t), &g).threshold()
        })
        .collect();
    ThresholdTable { tags: preds.tags.clone(), thresholds, provenance: preds.provenance.clone() }
}

/// Binary decisions, row-major like the prediction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelAssignments {
    pub ids: Vec<String>,
    pub tags: Vec<String>,
    pub values: Vec<bool>,
}

impl LabelAssignments {
    pub fn row(&self, i: usize) -> &[bool] {
        &self.values[i * self.tags.len()..(i + 1) * self.tags.len()]
    }
}

pub fn apply_thresholds(preds: &PredictionMatrix, table: &ThresholdTable) -> Result<LabelAssignments, EvalError> {
    if preds.tags != table.tags {
        return Err(EvalError::ColumnMismatch("threshold tags differ from prediction tags".into()));
    }
    let k = preds.n_tags();
    let values = preds.values.iter().enumerate().map(|(i, p)| *p >= table.thresholds[i % k]).collect();
    Ok(LabelAssignments { ids: preds.ids.clone(), tags: preds.tags.clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_example() {
        let s = scan_tag(&[0.1, 0.2, 0.9], &[false, false, true]);
        assert_eq!(s.candidates.len(), 20);
        assert_eq!(s.candidates[19], 0.9);
        assert_eq!(s.chosen, 3);
        assert!((s.threshold() - (0.1 + 3.0 * 0.8 / 19.0)).abs() < 1e-15);
        assert_eq!(s.f1[3], 1.0);
        assert!(s.f1[2] < 1.0);
    }

    #[test]
    fn degenerate_cases() {
        let s = scan_tag(&[0.3, 0.6], &[false, false]);
        assert_eq!(s.chosen, 0);
        assert_eq!(s.threshold(), 0.3);
        assert_eq!(threshold_candidates(&[0.5, 0.5, 0.5]), vec![0.5]);
    }

    #[test]
    fn boundary_is_inclusive_and_empty_is_empty() {
        let p = PredictionMatrix::new(vec!["a".into()], vec!["t".into()], vec![0.4], "x");
        let table = ThresholdTable::uniform(&p.tags, 0.4);
        assert_eq!(apply_thresholds(&p, &table).unwrap().values, vec![true]);
        let empty = PredictionMatrix::new(vec![], vec!["t".into()], vec![], "x");
        assert!(apply_thresholds(&empty, &table).unwrap().values.is_empty());
    }

    #[test]
    fn csv_round_trip_and_clamp() {
        let tags = vec!["a".to_string(), "b,c".to_string()];
        let t = ThresholdTable { tags: tags.clone(), thresholds: vec![0.25, 0.7], provenance: String::new() };
        assert_eq!(ThresholdTable::parse_csv(&t.to_csv(), &tags).unwrap(), t);
        let clamped = ThresholdTable::parse_csv("tag,threshold\na,1.5\n\"b,c\",-2\n", &tags).unwrap();
        assert_eq!(clamped.thresholds, vec![1.0, 0.0]);
        assert!(ThresholdTable::parse_csv("tag,threshold\na,0.5\n", &tags).is_err());
        assert!(ThresholdTable::parse_csv("tag,threshold\nz,0.5\n", &tags).is_err());
        assert!(ThresholdTable::parse_csv("tag,threshold\na,x\n", &tags).is_err());
    }
}
