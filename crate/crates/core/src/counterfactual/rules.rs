use serde::Serialize;

use super::{BiasAttribute, CounterfactualError};
use crate::text::lower_words;

/// Keyword lists that remove an entry from a bias subset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExclusionRules {
    pub negative_keywords: Vec<String>,
    pub nationalities: Vec<String>,
    pub other_countries: Vec<String>,
    pub cities: Vec<String>,
    /// Exclude entries whose keywords span more than one bias label.
    pub multi_label_exclusion: bool,
}

/// Which rule list fired, checked in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    NegativeKeyword,
    Nationality,
    OtherCountry,
    City,
}

impl ExclusionRules {
    pub fn empty() -> ExclusionRules {
        ExclusionRules { multi_label_exclusion: true, ..Default::default() }
    }

    pub fn default_for(attribute: BiasAttribute) -> ExclusionRules {
        let text = match attribute {
            BiasAttribute::Gender => include_str!("../../data/gender_exclusions.txt"),
            BiasAttribute::Country => include_str!("../../data/country_exclusions.txt"),
        };
        ExclusionRules::parse(text).expect("bundled exclusion lists are valid")
    }

    /// One keyword per line. `[negative]`, `[nationalities]`, `[countries]`
    /// and `[cities]` headers switch lists; lines before any header are
    /// negative keywords. `#` starts a comment line.
    pub fn parse(input: &str) -> Result<ExclusionRules, CounterfactualError> {
        let mut rules = ExclusionRules::empty();
        let mut current = RuleKind::NegativeKeyword;
        for (i, raw) in input.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(section) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = match section.trim() {
                    "negative" => RuleKind::NegativeKeyword,
                    "nationalities" => RuleKind::Nationality,
                    "countries" => RuleKind::OtherCountry,
                    "cities" => RuleKind::City,
                    other => {
                        return Err(CounterfactualError::Exclusions(format!(
                            "line {}: unknown section {other:?}",
                            i + 1
                        )))
                    }
                };
                continue;
            }
            if lower_words(line).is_empty() {
                return Err(CounterfactualError::Exclusions(format!("line {}: keyword has no words", i + 1)));
            }
            let keyword = line.to_lowercase();
            match current {
                RuleKind::NegativeKeyword => rules.negative_keywords.push(keyword),
                RuleKind::Nationality => rules.nationalities.push(keyword),
                RuleKind::OtherCountry => rules.other_countries.push(keyword),
                RuleKind::City => rules.cities.push(keyword),
            }
        }
        Ok(rules)
    }

    pub(crate) fn lists(&self) -> [(RuleKind, &[String]); 4] {
        [
            (RuleKind::NegativeKeyword, &self.negative_keywords),
            (RuleKind::Nationality, &self.nationalities),
            (RuleKind::OtherCountry, &self.other_countries),
            (RuleKind::City, &self.cities),
        ]
    }
}
