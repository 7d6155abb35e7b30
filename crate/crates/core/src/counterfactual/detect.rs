use serde::Serialize;

use super::lexicon::KeywordEntry;
use super::rules::RuleKind;
use super::{BiasAttribute, ExclusionRules, SwapLexicon, LABEL_COUNT};
use crate::corpus::Entry;
use crate::text::{lower_words, words};

/// A matched keyword: byte span in the entry text, the lowercase phrase,
/// and every lexicon row containing that phrase under the matched label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordSpan {
    pub start: usize,
    pub end: usize,
    pub keyword: String,
    #[serde(skip)]
    pub rows: Vec<usize>,
    /// Word index of the span's last word; used for role lookahead.
    #[serde(skip)]
    pub last_word: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exclusion {
    Rule { rule: RuleKind, keyword: String },
    MultipleLabels { labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Flagged { label: usize, spans: Vec<KeywordSpan> },
    Excluded(Exclusion),
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagResult {
    pub entry_id: String,
    pub attribute: BiasAttribute,
    pub outcome: Outcome,
}

impl FlagResult {
    pub fn is_flagged(&self) -> bool {
        matches!(self.outcome, Outcome::Flagged { .. })
    }
}

/// Word-index ranges where `phrase` occurs in `lower`.
fn phrase_hits<'a>(lower: &'a [String], phrase: &[String]) -> impl Iterator<Item = usize> + 'a {
    let len = phrase.len();
    let phrase = phrase.to_vec();
    (0..lower.len().saturating_sub(len.saturating_sub(1))).filter(move |&i| len > 0 && lower[i..i + len] == phrase[..])
}

/// Earliest occurrence (by word position) of any keyword in `list`.
fn first_hit(lower: &[String], list: &[String]) -> Option<String> {
    list.iter()
        .filter_map(|kw| {
            let phrase = lower_words(kw);
            phrase_hits(lower, &phrase).next().map(|pos| (pos, kw.clone()))
        })
        .min()
        .map(|(_, kw)| kw)
}

/// Greedy left-to-right, longest-first keyword matching.
pub(crate) fn match_keywords(text: &str, keywords: &[KeywordEntry]) -> Vec<(usize, KeywordSpan)> {
    let ws = words(text);
    let lower: Vec<String> = ws.iter().map(|w| w.lower()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        let best = keywords
            .iter()
            .filter(|k| i + k.words.len() <= lower.len() && lower[i..i + k.words.len()] == k.words[..])
            .max_by_key(|k| k.words.len());
        match best {
            Some(k) => {
                let last = i + k.words.len() - 1;
                out.push((
                    k.label,
                    KeywordSpan {
                        start: ws[i].start,
                        end: ws[last].end,
                        keyword: k.words.join(" "),
                        rows: k.rows.clone(),
                        last_word: last,
                    },
                ));
                i = last + 1;
            }
            None => i += 1,
        }
    }
    out
}

/// Classifies one entry for one attribute. Exclusion lists are checked
/// first, in order (negative keywords, nationalities, other countries,
/// cities), and the earliest keyword of the first list that fires is the
/// reason. Otherwise the entry is flagged iff its lexicon keywords all
/// belong to one flaggable label.
pub fn detect_bias_label(entry: &Entry, lexicon: &SwapLexicon, rules: &ExclusionRules) -> FlagResult {
    let result = |outcome| FlagResult { entry_id: entry.id.clone(), attribute: lexicon.attribute, outcome };
    let lower = lower_words(&entry.text);
    for (rule, list) in rules.lists() {
        if let Some(keyword) = first_hit(&lower, list) {
            return result(Outcome::Excluded(Exclusion::Rule { rule, keyword }));
        }
    }
    let matches = match_keywords(&entry.text, &lexicon.keyword_entries());
    let mut present = [false; LABEL_COUNT];
    for (label, _) in &matches {
        present[*label] = true;
    }
    let labels: Vec<usize> = (0..LABEL_COUNT).filter(|&l| present[l]).collect();
    match labels.as_slice() {
        [] => result(Outcome::NotApplicable),
        [label] if lexicon.sources[*label] => {
            result(Outcome::Flagged { label: *label, spans: matches.into_iter().map(|(_, s)| s).collect() })
        }
        [_] => result(Outcome::NotApplicable),
        many if rules.multi_label_exclusion => result(Outcome::Excluded(Exclusion::MultipleLabels {
            labels: many.iter().map(|&l| lexicon.attribute.label(l).to_string()).collect(),
        })),
        _ => result(Outcome::NotApplicable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn gender(text: &str) -> FlagResult {
        let e = Entry::new("e", text, Split::Train);
        detect_bias_label(&e, &SwapLexicon::default_gender(), &ExclusionRules::default_for(BiasAttribute::Gender))
    }

    fn country(text: &str) -> FlagResult {
        let e = Entry::new("e", text, Split::Train);
        detect_bias_label(&e, &SwapLexicon::default_country(), &ExclusionRules::default_for(BiasAttribute::Country))
    }

    #[test]
    fn female_keywords_flag() {
        match gender("Women and girls need aid").outcome {
            Outcome::Flagged { label, spans } => {
                assert_eq!(label, 0);
                let kws: Vec<&str> = spans.iter().map(|s| s.keyword.as_str()).collect();
                assert_eq!(kws, ["women", "girls"]);
                assert_eq!((spans[0].start, spans[0].end), (0, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_keyword_excludes() {
        assert_eq!(
            gender("Support for pregnant women").outcome,
            Outcome::Excluded(Exclusion::Rule { rule: RuleKind::NegativeKeyword, keyword: "pregnant".into() })
        );
    }

    #[test]
    fn two_genders_excluded() {
        assert_eq!(
            gender("Men and women in camps").outcome,
            Outcome::Excluded(Exclusion::MultipleLabels { labels: vec!["female".into(), "male".into()] })
        );
    }

    #[test]
    fn nationality_excludes_first() {
        assert_eq!(
            country("Syrian refugees crossed into Lebanon").outcome,
            Outcome::Excluded(Exclusion::Rule { rule: RuleKind::Nationality, keyword: "syrian".into() })
        );
    }

    #[test]
    fn other_country_and_city() {
        assert_eq!(
            country("Flows from Venezuela to Colombia rose").outcome,
            Outcome::Excluded(Exclusion::Rule { rule: RuleKind::OtherCountry, keyword: "colombia".into() })
        );
        assert_eq!(
            country("Shelling in Deir ez-Zor, Syria").outcome,
            Outcome::Excluded(Exclusion::Rule { rule: RuleKind::City, keyword: "deir ez-zor".into() })
        );
    }

    #[test]
    fn country_flags() {
        assert!(matches!(country("The crisis in Venezuela worsened").outcome, Outcome::Flagged { label: 0, .. }));
        assert!(matches!(country("Aid to Syria resumed").outcome, Outcome::Flagged { label: 1, .. }));
        assert!(matches!(
            country("Venezuela and Syria appeals").outcome,
            Outcome::Excluded(Exclusion::MultipleLabels { .. })
        ));
    }

    #[test]
    fn neutral_and_none() {
        assert!(matches!(gender("They need shelter").outcome, Outcome::Flagged { label: 2, .. }));
        assert_eq!(gender("Roads are flooded").outcome, Outcome::NotApplicable);
        // substrings do not match
        assert_eq!(gender("Womenfolk sheltered").outcome, Outcome::NotApplicable);
    }

    #[test]
    fn multi_label_rule_can_be_disabled() {
        let mut rules = ExclusionRules::default_for(BiasAttribute::Gender);
        rules.multi_label_exclusion = false;
        let e = Entry::new("e", "Men and women", Split::Train);
        assert_eq!(detect_bias_label(&e, &SwapLexicon::default_gender(), &rules).outcome, Outcome::NotApplicable);
    }

    #[test]
    fn longest_phrase_wins() {
        let lex = crate::counterfactual::parse_country_lexicon(
            "source,targets\nsyria:syrian arab republic,venezuela|canada\nsyria,venezuela|canada\n",
        )
        .unwrap();
        let e = Entry::new("e", "The Syrian Arab Republic said", Split::Train);
        match detect_bias_label(&e, &lex, &ExclusionRules::empty()).outcome {
            Outcome::Flagged { spans, .. } => assert_eq!(spans[0].keyword, "syrian arab republic"),
            other => panic!("{other:?}"),
        }
    }
}
