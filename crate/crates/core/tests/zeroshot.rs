use std::collections::BTreeMap;

use entryshift::corpus::{default_taxonomy, Entry, GroupName, Split, TagTaxonomy};
use entryshift::zeroshot::{
    classify_zero_shot, run_zero_shot, score_labels, Aggregation, Distribution, MaskFillProvider, StubProvider,
    Verbalizer, ZeroShotConfig, ZeroShotError,
};
use proptest::prelude::*;

/// Two words per tag, never shared: `w<tag>a`, `w<tag>b`.
fn unique_verbalizer(tax: &TagTaxonomy) -> Verbalizer {
    Verbalizer {
        tags: tax.tags().to_vec(),
        words: (0..tax.len()).map(|t| vec![format!("w{t}a"), format!("w{t}b")]).collect(),
    }
}

fn tag_of(word: &str) -> usize {
    word[1..word.len() - 1].parse().expect("generated word")
}

/// Returns the same distribution for every entry.
struct Fixed(Distribution);

impl MaskFillProvider for Fixed {
    fn fill(&self, _: &str, _: &str) -> Result<Distribution, ZeroShotError> {
        Ok(self.0.clone())
    }

    fn name(&self) -> String {
        "fixed".into()
    }
}

fn distribution(tax_len: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::btree_map((0..tax_len, prop::bool::ANY), 0.0..1.0f64, 0..40).prop_map(|m| {
        m.into_iter().map(|((t, b), p)| (format!("w{t}{}", if b { "b" } else { "a" }), p)).collect::<BTreeMap<_, _>>()
    })
}

fn classify(dist: &Distribution, aggregation: Aggregation) -> entryshift::zeroshot::ZeroShotPrediction {
    let tax = default_taxonomy();
    let v = unique_verbalizer(&tax);
    let config = ZeroShotConfig { aggregation, ..ZeroShotConfig::default() };
    classify_zero_shot(&Entry::new("e", "text", Split::Test), &Fixed(dist.clone()), &v, &tax, &config).unwrap()
}

proptest! {
    #[test]
    fn raising_a_word_never_lowers_its_tag(dist in distribution(79), tag in 0..79usize, second in prop::bool::ANY, bump in 0.0..1.0f64, mean in prop::bool::ANY) {
        let tax = default_taxonomy();
        let v = unique_verbalizer(&tax);
        let agg = if mean { Aggregation::Mean } else { Aggregation::Max };
        let word = format!("w{tag}{}", if second { "b" } else { "a" });
        let before = score_labels(&dist, &v, agg);
        let mut raised = dist.clone();
        let old = raised.get(&word).copied().unwrap_or(0.0);
        raised.insert(word, old + bump);
        let after = score_labels(&raised, &v, agg);
        prop_assert!(after[tag] >= before[tag]);
        for t in (0..79).filter(|&t| t != tag) {
            prop_assert_eq!(after[t], before[t]);
        }
    }

    #[test]
    fn normalization_stays_inside_groups(dist in distribution(79), other in distribution(79), group in 0..5usize, mean in prop::bool::ANY) {
        let tax = default_taxonomy();
        let agg = if mean { Aggregation::Mean } else { Aggregation::Max };
        let g = GroupName::ALL[group];
        let inside = tax.group_indices(g);
        // Only the words of group `g` come from `other`.
        let in_group = |w: &String| inside.contains(&tag_of(w));
        let mut mixed: Distribution = dist.iter().filter(|(w, _)| !in_group(w)).map(|(w, p)| (w.clone(), *p)).collect();
        mixed.extend(other.iter().filter(|(w, _)| in_group(w)).map(|(w, p)| (w.clone(), *p)));
        let a = classify(&dist, agg);
        let b = classify(&mixed, agg);
        for t in (0..79).filter(|t| !inside.contains(t)) {
            prop_assert_eq!(a.normalized[t], b.normalized[t]);
            prop_assert_eq!(a.predicted[t], b.predicted[t]);
        }
    }

    #[test]
    fn each_scored_group_sums_to_one_and_predicts_something(dist in distribution(79), mean in prop::bool::ANY) {
        let tax = default_taxonomy();
        let p = classify(&dist, if mean { Aggregation::Mean } else { Aggregation::Max });
        for g in GroupName::ALL {
            let idx = tax.group_indices(g);
            let sum: f64 = idx.iter().map(|&t| p.normalized[t]).sum();
            if idx.iter().any(|&t| p.scores[t] > 0.0) {
                prop_assert!((sum - 1.0).abs() < 1e-9);
                prop_assert!(idx.iter().any(|&t| p.predicted[t]));
            } else {
                prop_assert_eq!(sum, 0.0);
                prop_assert!(idx.iter().all(|&t| !p.predicted[t]));
            }
        }
    }

    #[test]
    fn stub_runs_are_deterministic(texts in prop::collection::vec("[a-z]{2,9}( [a-z]{2,9}){0,12}", 1..10), threads in 1..4usize) {
        let tax = default_taxonomy();
        let v = Verbalizer::builtin(&tax).unwrap();
        let stub = StubProvider::new(&v);
        let entries: Vec<Entry> = texts.iter().enumerate().map(|(i, t)| Entry::new(format!("e{i}"), t.clone(), Split::Test)).collect();
        let refs: Vec<&Entry> = entries.iter().collect();
        let config = ZeroShotConfig::default();
        let a = run_zero_shot(&refs, &stub, &v, &tax, &config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let b = pool.install(|| run_zero_shot(&refs, &stub, &v, &tax, &config)).unwrap();
        prop_assert_eq!(a, b);
    }
}
