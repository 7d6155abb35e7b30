use rayon::prelude::*;

use super::{ModelError, ModelParameters};
use crate::corpus::Entry;

/// Probabilities for a set of entries: one row per entry, one column per
/// tag in taxonomy order. `provenance` records the producing model.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub ids: Vec<String>,
    pub tags: Vec<String>,
    pub values: Vec<f64>,
    pub provenance: String,
}

impl PredictionMatrix {
    pub fn new(
        ids: Vec<String>,
        tags: Vec<String>,
        values: Vec<f64>,
        provenance: impl Into<String>,
    ) -> PredictionMatrix {
        assert_eq!(values.len(), ids.len() * tags.len(), "matrix shape");
        PredictionMatrix { ids, tags, values, provenance: provenance.into() }
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.tags.len()..(i + 1) * self.tags.len()]
    }

    pub fn get(&self, row: usize, tag: usize) -> f64 {
        self.values[row * self.tags.len() + tag]
    }

    pub fn column(&self, tag: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.get(r, tag)).collect()
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once("id").chain(self.tags.iter().map(String::as_str)).collect();
        w.write_record(&header).expect("in-memory write");
        for (i, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|p| format!("{p:.6}")));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Inference-mode probabilities for every entry, computed in parallel with
/// row order preserved.
pub fn predict_batch<'a, I>(model: &ModelParameters, entries: I) -> PredictionMatrix
where
    I: IntoIterator<Item = &'a Entry>,
{
    let entries: Vec<&Entry> = entries.into_iter().collect();
    let rows: Vec<Vec<f64>> = entries.par_iter().map(|e| model.probabilities(&model.encode(&e.text))).collect();
    PredictionMatrix::new(
        entries.iter().map(|e| e.id.clone()).collect(),
        model.taxonomy().tags().to_vec(),
        rows.concat(),
        model.fingerprint(),
    )
}

impl ModelParameters {
    pub fn check_taxonomy(&self, other: &crate::corpus::TagTaxonomy) -> Result<(), ModelError> {
        if self.taxonomy() == other {
            Ok(())
        } else {
            Err(ModelError::TaxonomyMismatch)
        }
    }
}
