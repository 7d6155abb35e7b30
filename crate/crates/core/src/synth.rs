//! Seeded synthetic corpora with a known, planted gender correlation.
//!
//! Every tag has a few signal words; a positive entry carries one of them
//! most of the time and a negative entry rarely does. About a third of the
//! entries also mention a gender group, and female mentions are far more
//! common when `Protection` is positive, so a model can pick up the gender
//! words as a shortcut for that tag.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, Entry, GroupName, Split, TagTaxonomy, TaskGroup};
use crate::seed::stage_rng;

/// Ten tags, two per group.
pub fn planted_taxonomy() -> TagTaxonomy {
    let g = |name: GroupName, tags: &[&str]| TaskGroup {
        name,
        level: name.level(),
        tags: tags.iter().map(|t| t.to_string()).collect(),
    };
    TagTaxonomy::new(vec![
        g(GroupName::Sectors, &["Health", "Protection"]),
        g(GroupName::Pillars1d, &["Context", "Displacement"]),
        g(GroupName::Subpillars1d, &["Context->Economy", "Displacement->Push factors"]),
        g(GroupName::Pillars2d, &["Impact", "At Risk"]),
        g(GroupName::Subpillars2d, &["Impact->Impact on people", "At Risk->Risk and vulnerabilities"]),
    ])
    .expect("planted taxonomy is valid")
}

/// (tag, base rate or rate given parent, parent tag, signal words)
const TAGS: &[(&str, f64, Option<&str>, &[&str])] = &[
    ("Health", 0.35, None, &["clinic", "medicine", "doctors"]),
    ("Protection", 0.30, None, &["harassment", "abuse", "safety"]),
    ("Context", 0.30, None, &["background", "historically", "region"]),
    ("Displacement", 0.30, None, &["displaced", "fled", "camps"]),
    ("Context->Economy", 0.60, Some("Context"), &["prices", "inflation", "wages"]),
    ("Displacement->Push factors", 0.60, Some("Displacement"), &["shelling", "persecution", "fleeing"]),
    ("Impact", 0.35, None, &["damaged", "disrupted", "destroyed"]),
    ("At Risk", 0.30, None, &["vulnerable", "threatened", "exposed"]),
    ("Impact->Impact on people", 0.60, Some("Impact"), &["injuries", "hardship", "suffering"]),
    ("At Risk->Risk and vulnerabilities", 0.60, Some("At Risk"), &["fragile", "precarious", "susceptible"]),
];

const FILLER: &[&str] = &[
    "reports",
    "indicate",
    "the",
    "area",
    "district",
    "week",
    "according",
    "assessment",
    "team",
    "visited",
    "several",
    "sites",
    "recent",
    "ongoing",
    "situation",
    "remains",
    "local",
    "partners",
    "noted",
    "additional",
    "data",
    "collected",
    "during",
    "field",
    "visit",
    "monitoring",
    "continues",
    "in",
    "northern",
    "southern",
    "province",
    "towns",
    "villages",
    "were",
    "was",
    "has",
    "been",
    "observed",
    "across",
    "multiple",
    "locations",
    "latest",
    "update",
    "shows",
    "a",
    "of",
    "and",
    "to",
    "with",
    "from",
    "for",
    "month",
    "since",
    "last",
    "officials",
    "said",
    "teams",
    "conducted",
    "interviews",
    "households",
    "surveyed",
    "communities",
];

const FEMALE: &[&str] = &["women", "girls", "mothers", "women and girls"];
const MALE: &[&str] = &["men", "boys", "fathers", "men and boys"];
const NEUTRAL: &[&str] = &["persons", "children", "individuals"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub seed: u64,
    pub entries: usize,
    /// Fractions for validation and test; the rest is train.
    pub validation_fraction: f64,
    pub test_fraction: f64,
    /// Chance a positive entry carries one of its tag's signal words.
    pub signal_rate: f64,
    /// Chance a negative entry carries one anyway.
    pub noise_rate: f64,
    pub gender_rate: f64,
    /// Gender mix (female, male) when Protection is positive / negative;
    /// the remainder is neutral.
    pub mix_positive: (f64, f64),
    pub mix_negative: (f64, f64),
    pub country_rate: f64,
    pub filler_words: (usize, usize),
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            seed: 7,
            entries: 2000,
            validation_fraction: 0.15,
            test_fraction: 0.15,
            signal_rate: 0.9,
            noise_rate: 0.03,
            gender_rate: 0.35,
            mix_positive: (0.75, 0.15),
            mix_negative: (0.15, 0.45),
            country_rate: 0.12,
            filler_words: (8, 14),
        }
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty list")
}

fn insert_at(rng: &mut ChaCha8Rng, words: &mut Vec<String>, phrase: &str) {
    let at = rng.gen_range(0..=words.len());
    words.insert(at, phrase.to_string());
}

/// Deterministic corpus for `spec`; entry ids are `p0000`, `p0001`, ...
pub fn planted_corpus(spec: &PlantedSpec) -> Dataset {
    let tax = Arc::new(planted_taxonomy());
    let mut rng = stage_rng(spec.seed, "synth");
    let n_test = (spec.entries as f64 * spec.test_fraction).round() as usize;
    let n_val = (spec.entries as f64 * spec.validation_fraction).round() as usize;
    let mut entries = Vec::with_capacity(spec.entries);
    for i in 0..spec.entries {
        let split = if i < spec.entries - n_val - n_test {
            Split::Train
        } else if i < spec.entries - n_test {
            Split::Validation
        } else {
            Split::Test
        };
        let mut positive = [false; 10];
        for (k, (_, rate, parent, _)) in TAGS.iter().enumerate() {
            let allowed = parent.is_none_or(|p| positive[TAGS.iter().position(|t| t.0 == p).expect("parent listed")]);
            positive[k] = allowed && rng.gen_bool(*rate);
        }
        let n_fill = rng.gen_range(spec.filler_words.0..=spec.filler_words.1);
        let mut words: Vec<String> = (0..n_fill).map(|_| pick(&mut rng, FILLER).to_string()).collect();
        for (k, (_, _, _, signal)) in TAGS.iter().enumerate() {
            let p = if positive[k] { spec.signal_rate } else { spec.noise_rate };
            if rng.gen_bool(p) {
                let w = pick(&mut rng, signal);
                insert_at(&mut rng, &mut words, w);
            }
        }
        if rng.gen_bool(spec.gender_rate) {
            let (f, m) = if positive[1] { spec.mix_positive } else { spec.mix_negative };
            let u: f64 = rng.gen();
            let list = if u < f {
                FEMALE
            } else if u < f + m {
                MALE
            } else {
                NEUTRAL
            };
            let w = pick(&mut rng, list);
            insert_at(&mut rng, &mut words, w);
        }
        if rng.gen_bool(spec.country_rate) {
            let syria = if positive[3] { 0.65 } else { 0.4 };
            let c = if rng.gen_bool(syria) { "in Syria" } else { "in Venezuela" };
            insert_at(&mut rng, &mut words, c);
        }
        let mut text = words.join(" ");
        if let Some(first) = text.get(..1) {
            text = first.to_uppercase() + &text[1..];
        }
        text.push('.');
        let mut e = Entry::new(format!("p{i:04}"), text, split);
        for (k, (tag, _, _, _)) in TAGS.iter().enumerate() {
            if positive[k] {
                let group = tax.group_of(tax.tag_index(tag).expect("tag in taxonomy"));
                e = e.with_labels(group, &[tag]);
            }
        }
        entries.push(e);
    }
    Dataset::new(tax, entries, format!("planted seed={}", spec.seed)).expect("generated corpus is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_split() {
        let spec = PlantedSpec { entries: 200, ..Default::default() };
        let a = planted_corpus(&spec);
        assert_eq!(a.to_jsonl(), planted_corpus(&spec).to_jsonl());
        assert_eq!(
            (a.split_len(Split::Train), a.split_len(Split::Validation), a.split_len(Split::Test)),
            (140, 30, 30)
        );
        let b = planted_corpus(&PlantedSpec { seed: 8, ..spec });
        assert_ne!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn female_mentions_track_protection() {
        let ds = planted_corpus(&PlantedSpec::default());
        let tax = ds.taxonomy();
        let prot = tax.tag_index("Protection").unwrap();
        let female = |t: &str| {
            let t = t.to_lowercase();
            FEMALE.iter().any(|w| t.split(|c: char| !c.is_alphanumeric()).any(|x| x == *w))
        };
        let mut table = [[0f64; 2]; 2];
        for e in ds.entries() {
            table[e.gold_vector(tax)[prot] as usize][female(&e.text) as usize] += 1.0;
        }
        let odds = (table[1][1] / table[1][0]) / (table[0][1] / table[0][0]);
        assert!(odds >= 4.0, "odds ratio {odds}");
    }
}
