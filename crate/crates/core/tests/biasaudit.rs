use entryshift::biasaudit::{overall_shift, tag_shift, tag_shift_matrix, TagShiftMatrix};
use entryshift::classifier::PredictionMatrix;
use entryshift::corpus::{Entry, Split};
use entryshift::counterfactual::{AuditFamily, BiasAttribute, PairedAuditSet};
use proptest::prelude::*;

const TAGS: usize = 6;

fn paired(families: usize, attribute: BiasAttribute) -> PairedAuditSet {
    let families = (0..families)
        .map(|f| AuditFamily {
            origin: format!("f{f}"),
            forms: std::array::from_fn(|m| Entry::new(format!("f{f}:{m}"), "x", Split::Test)),
        })
        .collect();
    PairedAuditSet { attribute, families, dropped_ambiguous: 0 }
}

/// Predictions for every form, rows in family-major order.
fn predictions(audit: &PairedAuditSet, probs: &[f64]) -> PredictionMatrix {
    let ids: Vec<String> = audit.all_forms().map(|e| e.id.clone()).collect();
    let tags = (0..TAGS).map(|t| format!("t{t}")).collect();
    PredictionMatrix::new(ids, tags, probs.to_vec(), "gen")
}

fn case() -> impl Strategy<Value = (usize, Vec<f64>, bool)> {
    (1..20usize, prop::bool::ANY)
        .prop_flat_map(|(n, gender)| (Just(n), prop::collection::vec(0.0..=1.0f64, n * 3 * TAGS), Just(gender)))
}

fn attribute(gender: bool) -> BiasAttribute {
    if gender {
        BiasAttribute::Gender
    } else {
        BiasAttribute::Country
    }
}

/// Median by selection: smallest value with at least half the sample at or below it.
fn oracle_median(values: &[f64]) -> f64 {
    let n = values.len();
    let rank = |k: usize| -> f64 {
        *values
            .iter()
            .find(|&&v| {
                let below = values.iter().filter(|&&w| w < v).count();
                let at_most = values.iter().filter(|&&w| w <= v).count();
                below <= k && k < at_most
            })
            .unwrap()
    };
    if n % 2 == 1 {
        rank(n / 2)
    } else {
        (rank(n / 2 - 1) + rank(n / 2)) / 2.0
    }
}

proptest! {
    #[test]
    fn cells_match_median_oracle((n, probs, g) in case()) {
        let audit = paired(n, attribute(g));
        let preds = predictions(&audit, &probs);
        for t in 0..TAGS {
            for (m, k) in audit.attribute.transitions() {
                let shifts: Vec<f64> = (0..n).map(|f| (probs[(3 * f + k) * TAGS + t] - probs[(3 * f + m) * TAGS + t]) * 100.0).collect();
                let got = tag_shift(&preds, &audit, t, (m, k)).unwrap().unwrap();
                prop_assert_eq!(got, oracle_median(&shifts));
            }
        }
    }

    #[test]
    fn reversed_transitions_negate_exactly((n, probs, g) in case()) {
        let audit = paired(n, attribute(g));
        let preds = predictions(&audit, &probs);
        for t in 0..TAGS {
            for (m, k) in audit.attribute.transitions() {
                let fwd = tag_shift(&preds, &audit, t, (m, k)).unwrap().unwrap();
                let back = tag_shift(&preds, &audit, t, (k, m)).unwrap().unwrap();
                prop_assert_eq!(fwd, -back);
            }
        }
    }

    #[test]
    fn overall_is_nonnegative_and_zero_only_for_zero_cells((n, probs, g) in case(), flat in prop::bool::ANY) {
        let audit = paired(n, attribute(g));
        let probs = if flat {
            // Every form of a family gets the same predictions.
            (0..probs.len()).map(|i| probs[(i / (3 * TAGS)) * 3 * TAGS + i % TAGS]).collect()
        } else {
            probs
        };
        let preds = predictions(&audit, &probs);
        let matrix = tag_shift_matrix(&preds, &audit, &(0..TAGS).collect::<Vec<_>>()).unwrap();
        let report = overall_shift(&matrix).unwrap();
        prop_assert!(report.overall_shift >= 0.0);
        let all_zero = matrix.cells.iter().all(|c| *c == Some(0.0));
        prop_assert_eq!(report.overall_shift == 0.0, all_zero);
        if flat {
            prop_assert!(all_zero);
        }
    }

    #[test]
    fn scaling_probabilities_scales_the_score((n, probs, g) in case(), c in 0.01..=1.0f64) {
        let audit = paired(n, attribute(g));
        let cols: Vec<usize> = (0..TAGS).collect();
        let base = overall_shift(&tag_shift_matrix(&predictions(&audit, &probs), &audit, &cols).unwrap()).unwrap();
        let scaled_probs: Vec<f64> = probs.iter().map(|p| p * c).collect();
        let scaled = overall_shift(&tag_shift_matrix(&predictions(&audit, &scaled_probs), &audit, &cols).unwrap()).unwrap();
        prop_assert!((scaled.overall_shift - c * base.overall_shift).abs() <= 1e-9 * (1.0 + base.overall_shift));
    }

    #[test]
    fn matrix_json_round_trip((n, probs, g) in case()) {
        let audit = paired(n, attribute(g));
        let matrix = tag_shift_matrix(&predictions(&audit, &probs), &audit, &[0, 2, 5]).unwrap();
        let value = serde_json::to_value(&matrix).unwrap();
        prop_assert_eq!(TagShiftMatrix::from_value(&value).unwrap(), matrix);
    }
}

#[test]
fn empty_audit_set_is_not_computable() {
    let audit = paired(0, BiasAttribute::Gender);
    let preds = PredictionMatrix::new(Vec::new(), (0..TAGS).map(|t| format!("t{t}")).collect(), Vec::new(), "gen");
    assert_eq!(tag_shift(&preds, &audit, 0, (0, 1)).unwrap(), None);
    let matrix = tag_shift_matrix(&preds, &audit, &[0]).unwrap();
    assert!(overall_shift(&matrix).is_err());
}
