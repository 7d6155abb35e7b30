use entryshift::classifier::PredictionMatrix;
use entryshift::corpus::{GroupName, Level, TagTaxonomy, TaskGroup};
use entryshift::evaluation::{
    apply_thresholds, compute_metrics, scan_tag, threshold_candidates, tune_thresholds, LabelAssignments,
    ThresholdTable, GRID_POINTS,
};
use proptest::prelude::*;

fn taxonomy() -> TagTaxonomy {
    let g = |name, level, tags: &[&str]| TaskGroup { name, level, tags: tags.iter().map(|s| s.to_string()).collect() };
    TagTaxonomy::new(vec![
        g(GroupName::Sectors, Level::Single, &["s1", "s2", "s3"]),
        g(GroupName::Pillars1d, Level::Single, &["P", "R"]),
        g(GroupName::Subpillars1d, Level::TwoLevel, &["P->a", "R->b"]),
        g(GroupName::Pillars2d, Level::Single, &["Q"]),
        g(GroupName::Subpillars2d, Level::TwoLevel, &["Q->c", "Q->d"]),
    ])
    .unwrap()
}

const TAGS: usize = 10;

/// Rows of (probabilities, gold) over the small taxonomy.
fn rows(max: usize) -> impl Strategy<Value = Vec<(Vec<f64>, Vec<bool>)>> {
    prop::collection::vec(
        (prop::collection::vec(0.0..=1.0f64, TAGS), prop::collection::vec(prop::bool::ANY, TAGS)),
        1..max,
    )
}

fn matrix(rows: &[(Vec<f64>, Vec<bool>)], tax: &TagTaxonomy) -> (PredictionMatrix, Vec<Vec<bool>>) {
    let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
    let values = rows.iter().flat_map(|r| r.0.clone()).collect();
    (PredictionMatrix::new(ids, tax.tags().to_vec(), values, "gen"), rows.iter().map(|r| r.1.clone()).collect())
}

fn oracle_f1(decisions: &[bool], gold: &[bool]) -> f64 {
    let tp = decisions.iter().zip(gold).filter(|(d, g)| **d && **g).count() as f64;
    let predicted = decisions.iter().filter(|d| **d).count() as f64;
    let actual = gold.iter().filter(|g| **g).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        let (p, r) = (tp / predicted, tp / actual);
        2.0 * p * r / (p + r)
    }
}

fn assignments(rows: &[(Vec<bool>, Vec<bool>)], tax: &TagTaxonomy) -> (LabelAssignments, Vec<Vec<bool>>) {
    let a = LabelAssignments {
        ids: (0..rows.len()).map(|i| format!("r{i}")).collect(),
        tags: tax.tags().to_vec(),
        values: rows.iter().flat_map(|r| r.0.clone()).collect(),
    };
    (a, rows.iter().map(|r| r.1.clone()).collect())
}

proptest! {
    #[test]
    fn chosen_threshold_is_first_best_on_grid(probs in prop::collection::vec(0.0..=1.0f64, 1..40), seed in any::<u64>()) {
        let gold: Vec<bool> = (0..probs.len()).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let scan = scan_tag(&probs, &gold);
        let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(scan.candidates.len() == GRID_POINTS || (lo == hi && scan.candidates.len() == 1));
        let oracle: Vec<f64> = scan
            .candidates
            .iter()
            .map(|&c| oracle_f1(&probs.iter().map(|p| *p >= c).collect::<Vec<_>>(), &gold))
            .collect();
        let best = oracle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((oracle[scan.chosen] - best).abs() < 1e-12);
        prop_assert!(oracle[..scan.chosen].iter().all(|&f| f < best - 1e-12));
        let t = scan.threshold();
        prop_assert!(t >= lo && t <= hi);
    }

    #[test]
    fn candidates_span_the_column(probs in prop::collection::vec(0.0..=1.0f64, 2..40)) {
        let c = threshold_candidates(&probs);
        let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(c[0], lo);
        prop_assert_eq!(*c.last().unwrap(), hi);
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn tuning_is_deterministic_and_in_range(rows in rows(30)) {
        let tax = taxonomy();
        let (preds, gold) = matrix(&rows, &tax);
        let a = tune_thresholds(&preds, &gold);
        prop_assert_eq!(&a, &tune_thresholds(&preds, &gold));
        for t in 0..TAGS {
            let col = preds.column(t);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(a.thresholds[t] >= lo && a.thresholds[t] <= hi);
        }
        let back = ThresholdTable::parse_csv(&a.to_csv(), &a.tags).unwrap();
        prop_assert_eq!(back.thresholds, a.thresholds);
    }

    #[test]
    fn averages_and_ranges(rows in prop::collection::vec((prop::collection::vec(prop::bool::ANY, TAGS), prop::collection::vec(prop::bool::ANY, TAGS)), 1..30)) {
        let tax = taxonomy();
        let (a, gold) = assignments(&rows, &tax);
        let report = compute_metrics(&a, &gold, &tax);
        for m in &report.per_tag {
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let t = tax.tag_index(&m.tag).unwrap();
            let col: Vec<bool> = (0..rows.len()).map(|i| a.row(i)[t]).collect();
            let g: Vec<bool> = gold.iter().map(|r| r[t]).collect();
            prop_assert!((m.f1 - oracle_f1(&col, &g)).abs() < 1e-12);
        }
        for g in &report.groups {
            let tags: Vec<_> = report.per_tag.iter().filter(|m| m.group == g.group).collect();
            let mean = tags.iter().map(|m| m.f1).sum::<f64>() / tags.len() as f64;
            prop_assert!((g.macro_avg.f1 - mean).abs() <= 1e-12);
        }
        let avg = report.groups.iter().map(|g| g.macro_avg.f1).sum::<f64>() / 5.0;
        prop_assert!((report.avg.f1 - avg).abs() <= 1e-12);
        let avg_p = report.groups.iter().map(|g| g.macro_avg.precision).sum::<f64>() / 5.0;
        prop_assert!((report.avg.precision - avg_p).abs() <= 1e-12);
        prop_assert_eq!(&report, &compute_metrics(&a, &gold, &tax));
    }

    #[test]
    fn a_correct_row_never_lowers_f1(
        rows in prop::collection::vec((prop::collection::vec(prop::bool::ANY, TAGS), prop::collection::vec(prop::bool::ANY, TAGS)), 1..30),
        extra in prop::collection::vec(prop::bool::ANY, TAGS),
    ) {
        let tax = taxonomy();
        let (a, gold) = assignments(&rows, &tax);
        let before = compute_metrics(&a, &gold, &tax);
        let mut grown = rows.clone();
        grown.push((extra.clone(), extra));
        let (a2, gold2) = assignments(&grown, &tax);
        let after = compute_metrics(&a2, &gold2, &tax);
        for (b, c) in before.per_tag.iter().zip(&after.per_tag) {
            prop_assert!(c.f1 >= b.f1);
        }
    }

    #[test]
    fn applying_thresholds_matches_the_rule(rows in rows(20), cut in 0.0..=1.0f64) {
        let tax = taxonomy();
        let (preds, _) = matrix(&rows, &tax);
        let a = apply_thresholds(&preds, &ThresholdTable::uniform(tax.tags(), cut)).unwrap();
        for (i, r) in rows.iter().enumerate() {
            for t in 0..TAGS {
                prop_assert_eq!(a.row(i)[t], r.0[t] >= cut);
            }
        }
    }
}
