use serde::Serialize;

use super::LabelAssignments;
use crate::corpus::{GroupName, TagTaxonomy};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagMetrics {
    pub tag: String,
    pub group: GroupName,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub group: GroupName,
    /// Unweighted mean over the group's tags.
    pub macro_avg: Summary,
    /// Pooled over the group's decisions.
    pub micro: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Value used for precision/recall/F1 when a denominator is zero.
    pub zero_division: f64,
    pub groups: Vec<GroupMetrics>,
    /// Mean of the five macro group columns.
    pub avg: Summary,
    /// Mean of the five micro group columns.
    pub avg_micro: Summary,
    pub per_tag: Vec<TagMetrics>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn counts_summary(tp: usize, fp: usize, fn_: usize) -> Summary {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Summary { precision, recall, f1: harmonic(precision, recall) }
}

fn mean(items: impl Iterator<Item = Summary>) -> Summary {
    let all: Vec<Summary> = items.collect();
    let n = all.len().max(1) as f64;
    Summary {
        precision: all.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: all.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: all.iter().map(|s| s.f1).sum::<f64>() / n,
    }
}

pub fn compute_metrics(assign: &LabelAssignments, gold: &[Vec<bool>], taxonomy: &TagTaxonomy) -> MetricsReport {
    assert_eq!(assign.ids.len(), gold.len(), "rows align with gold");
    assert_eq!(assign.tags.as_slice(), taxonomy.tags(), "columns follow the taxonomy");
    let per_tag: Vec<TagMetrics> = (0..taxonomy.len())
        .map(|t| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (i, g) in gold.iter().enumerate() {
                match (assign.row(i)[t], g[t]) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            let s = counts_summary(tp, fp, fn_);
            TagMetrics {
                tag: taxonomy.tags()[t].clone(),
                group: taxonomy.group_of(t),
                tp,
                fp,
                fn_,
                precision: s.precision,
                recall: s.recall,
                f1: s.f1,
            }
        })
        .collect();
    let groups: Vec<GroupMetrics> = GroupName::ALL
        .iter()
        .map(|&group| {
            let tags: Vec<&TagMetrics> = per_tag.iter().filter(|m| m.group == group).collect();
            let macro_avg = mean(tags.iter().map(|m| Summary { precision: m.precision, recall: m.recall, f1: m.f1 }));
            let (tp, fp, fn_) = tags.iter().fold((0, 0, 0), |a, m| (a.0 + m.tp, a.1 + m.fp, a.2 + m.fn_));
            GroupMetrics { group, macro_avg, micro: counts_summary(tp, fp, fn_) }
        })
        .collect();
    MetricsReport {
        zero_division: 0.0,
        avg: mean(groups.iter().map(|g| g.macro_avg)),
        avg_micro: mean(groups.iter().map(|g| g.micro)),
        groups,
        per_tag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Level, TaskGroup};

    fn taxonomy() -> TagTaxonomy {
        let g =
            |name, level, tags: &[&str]| TaskGroup { name, level, tags: tags.iter().map(|s| s.to_string()).collect() };
        TagTaxonomy::new(vec![
            g(GroupName::Sectors, Level::Single, &["t1", "t2"]),
            g(GroupName::Pillars1d, Level::Single, &["P"]),
            g(GroupName::Subpillars1d, Level::TwoLevel, &["P->a"]),
            g(GroupName::Pillars2d, Level::Single, &["Q"]),
            g(GroupName::Subpillars2d, Level::TwoLevel, &["Q->c"]),
        ])
        .unwrap()
    }

    fn assign(tax: &TagTaxonomy, rows: Vec<Vec<bool>>) -> LabelAssignments {
        LabelAssignments {
            ids: (0..rows.len()).map(|i| format!("e{i}")).collect(),
            tags: tax.tags().to_vec(),
            values: rows.concat(),
        }
    }

    #[test]
    fn hand_counted_group() {
        let tax = taxonomy();
        let a = assign(&tax, vec![vec![true, true, false, false, false, false]]);
        let gold = vec![vec![true, false, false, false, false, false]];
        let r = compute_metrics(&a, &gold, &tax);
        assert_eq!((r.per_tag[0].precision, r.per_tag[0].f1), (1.0, 1.0));
        assert_eq!((r.per_tag[1].precision, r.per_tag[1].f1), (0.0, 0.0));
        assert_eq!(r.groups[0].macro_avg.precision, 0.5);
        assert_eq!(r.groups[0].macro_avg.f1, 0.5);
        assert_eq!(r.groups[0].micro.precision, 0.5);
        // other groups: nothing predicted, nothing gold
        assert_eq!(r.groups[1].macro_avg.f1, 0.0);
        assert!((r.avg.f1 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let tax = taxonomy();
        let row = vec![true; 6];
        let r = compute_metrics(&assign(&tax, vec![row.clone()]), &[row], &tax);
        assert_eq!(r.avg, Summary { precision: 1.0, recall: 1.0, f1: 1.0 });
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["groups"].is_array() && json["avg"].is_object() && json["per_tag"][0]["fn"].is_number());
    }
}
