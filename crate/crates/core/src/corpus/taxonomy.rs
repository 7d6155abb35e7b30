use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Separator between pillar and subpillar in two-level tag identifiers.
pub const LEVEL_SEPARATOR: &str = "->";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupName {
    Sectors,
    #[serde(rename = "pillars_1d")]
    Pillars1d,
    #[serde(rename = "subpillars_1d")]
    Subpillars1d,
    #[serde(rename = "pillars_2d")]
    Pillars2d,
    #[serde(rename = "subpillars_2d")]
    Subpillars2d,
}

impl GroupName {
    pub const ALL: [GroupName; 5] = [
        GroupName::Sectors,
        GroupName::Pillars1d,
        GroupName::Subpillars1d,
        GroupName::Pillars2d,
        GroupName::Subpillars2d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupName::Sectors => "sectors",
            GroupName::Pillars1d => "pillars_1d",
            GroupName::Subpillars1d => "subpillars_1d",
            GroupName::Pillars2d => "pillars_2d",
            GroupName::Subpillars2d => "subpillars_2d",
        }
    }

    pub fn parse(s: &str) -> Option<GroupName> {
        GroupName::ALL.into_iter().find(|g| g.as_str() == s)
    }

    pub fn level(self) -> Level {
        match self {
            GroupName::Subpillars1d | GroupName::Subpillars2d => Level::TwoLevel,
            _ => Level::Single,
        }
    }

    /// The single-level pillar group a two-level group hangs off.
    pub fn parent(self) -> Option<GroupName> {
        match self {
            GroupName::Subpillars1d => Some(GroupName::Pillars1d),
            GroupName::Subpillars2d => Some(GroupName::Pillars2d),
            _ => None,
        }
    }

    /// Index of the replicated final sub-layer that owns this group's heads
    /// in the combinatorial architecture.
    pub fn sublayer(self) -> usize {
        match self {
            GroupName::Sectors | GroupName::Pillars1d | GroupName::Pillars2d => 0,
            GroupName::Subpillars1d => 1,
            GroupName::Subpillars2d => 2,
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Single,
    TwoLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskGroup {
    pub name: GroupName,
    pub level: Level,
    pub tags: Vec<String>,
}

/// The ordered task groups and their tags. Tag indices follow group order
/// then tag order, and are the column order of every prediction matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagTaxonomy {
    groups: Vec<TaskGroup>,
    tags: Vec<String>,
    tag_group: Vec<GroupName>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TaxonomyFile {
    groups: Vec<TaskGroup>,
}

impl TagTaxonomy {
    pub fn new(groups: Vec<TaskGroup>) -> Result<TagTaxonomy, CorpusError> {
        let invalid = |msg: String| CorpusError::InvalidTaxonomy(msg);
        for name in GroupName::ALL {
            let n = groups.iter().filter(|g| g.name == name).count();
            if n != 1 {
                return Err(invalid(format!("group {name} must appear exactly once (found {n})")));
            }
        }
        let mut tags = Vec::new();
        let mut tag_group = Vec::new();
        let mut index = HashMap::new();
        for group in &groups {
            if group.level != group.name.level() {
                return Err(invalid(format!("group {} has the wrong level", group.name)));
            }
            if group.tags.is_empty() {
                return Err(invalid(format!("group {} has no tags", group.name)));
            }
            for tag in &group.tags {
                if tag.trim().is_empty() {
                    return Err(invalid(format!("empty tag in group {}", group.name)));
                }
                if let Some(parent) = group.name.parent() {
                    let pillar = tag.split_once(LEVEL_SEPARATOR).map(|(p, _)| p).ok_or_else(|| {
                        invalid(format!("two-level tag {tag:?} lacks the {LEVEL_SEPARATOR:?} separator"))
                    })?;
                    let parent_tags = &groups.iter().find(|g| g.name == parent).expect("checked above").tags;
                    if !parent_tags.iter().any(|p| p == pillar) {
                        return Err(invalid(format!("pillar {pillar:?} of {tag:?} is not in {parent}")));
                    }
                }
                if index.insert(tag.clone(), tags.len()).is_some() {
                    return Err(invalid(format!("duplicate tag {tag:?}")));
                }
                tags.push(tag.clone());
                tag_group.push(group.name);
            }
        }
        Ok(TagTaxonomy { groups, tags, tag_group, index })
    }

    pub fn from_json(json: &str) -> Result<TagTaxonomy, CorpusError> {
        let file: TaxonomyFile = serde_json::from_str(json).map_err(|e| CorpusError::InvalidTaxonomy(e.to_string()))?;
        TagTaxonomy::new(file.groups)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TaxonomyFile { groups: self.groups.clone() }).expect("taxonomy serializes")
    }

    pub fn groups(&self) -> &[TaskGroup] {
        &self.groups
    }

    pub fn group(&self, name: GroupName) -> &TaskGroup {
        self.groups.iter().find(|g| g.name == name).expect("every group is present")
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn group_of(&self, tag_index: usize) -> GroupName {
        self.tag_group[tag_index]
    }

    /// Column indices of a group's tags, in canonical order.
    pub fn group_indices(&self, name: GroupName) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tag_group[i] == name).collect()
    }

    /// Column indices of all tags in single-level groups.
    pub fn single_level_indices(&self) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tag_group[i].level() == Level::Single).collect()
    }
}

fn group(name: GroupName, tags: &[&str]) -> TaskGroup {
    TaskGroup { name, level: name.level(), tags: tags.iter().map(|t| t.to_string()).collect() }
}

fn two_level(name: GroupName, tree: &[(&str, &[&str])]) -> TaskGroup {
    let tags = tree
        .iter()
        .flat_map(|(pillar, subs)| subs.iter().map(move |s| format!("{pillar}{LEVEL_SEPARATOR}{s}")))
        .collect();
    TaskGroup { name, level: Level::TwoLevel, tags }
}

/// The built-in humanitarian analysis framework: 5 groups, 79 tags.
pub fn default_taxonomy() -> TagTaxonomy {
    let groups = vec![
        group(
            GroupName::Sectors,
            &[
                "Agriculture",
                "Cross-sector",
                "Education",
                "Food Security",
                "Health",
                "Livelihoods",
                "Logistics",
                "Nutrition",
                "Protection",
                "Shelter",
                "WASH",
            ],
        ),
        group(
            GroupName::Pillars1d,
            &[
                "Context",
                "COVID-19",
                "Displacement",
                "Humanitarian Access",
                "Information & Communication",
                "Casualties",
                "Shock/Event",
            ],
        ),
        two_level(
            GroupName::Subpillars1d,
            &[
                ("Casualties", &["Dead", "Injured", "Missing"]),
                (
                    "Context",
                    &[
                        "Demography",
                        "Economy",
                        "Environment",
                        "Legal & Policy",
                        "Politics",
                        "Security & stability",
                        "Socio-cultural",
                    ],
                ),
                (
                    "COVID-19",
                    &[
                        "Cases",
                        "Contact tracing",
                        "Deaths",
                        "Hospitalization & care",
                        "Prevention campaign",
                        "Research and outlook",
                        "Restriction measures",
                        "Testing",
                        "Vaccination",
                    ],
                ),
                (
                    "Displacement",
                    &["Intentions", "Local integration", "Pull factors", "Push factors", "Type/numbers/movements"],
                ),
                (
                    "Humanitarian Access",
                    &[
                        "People facing humanitarian access constraints/humanitarian access gaps",
                        "Physical constraints",
                        "Population to relief",
                        "Relief to population",
                    ],
                ),
                (
                    "Information & Communication",
                    &[
                        "Communication means and preferences",
                        "Information challenges and barriers",
                        "Knowledge and info gaps (hum)",
                        "Knowledge and info gaps (pop)",
                    ],
                ),
                (
                    "Shock/Event",
                    &[
                        "Hazard & threats",
                        "Mitigating factors",
                        "Type and characteristics",
                        "Underlying/aggravating factors",
                    ],
                ),
            ],
        ),
        group(
            GroupName::Pillars2d,
            &[
                "Capacities & Response",
                "Humanitarian Conditions",
                "Impact",
                "At Risk",
                "Priority Needs",
                "Priority Interventions",
            ],
        ),
        two_level(
            GroupName::Subpillars2d,
            &[
                ("At Risk", &["Number of people at risk", "Risk and vulnerabilities"]),
                (
                    "Capacities & Response",
                    &[
                        "International response",
                        "Local response",
                        "National response",
                        "People reached/response gaps",
                        "Red cross/red crescent",
                    ],
                ),
                (
                    "Humanitarian Conditions",
                    &[
                        "Coping mechanisms",
                        "Living standards",
                        "Number of people in need",
                        "Physical and mental well-being",
                    ],
                ),
                (
                    "Impact",
                    &[
                        "Driver/aggravating factors",
                        "Impact on people",
                        "Impact on systems, services, and networks",
                        "Number of people affected",
                    ],
                ),
                ("Priority Needs", &["Expressed by humanitarian staff", "Expressed by population"]),
                ("Priority Interventions", &["Expressed by humanitarian staff", "Expressed by population"]),
            ],
        ),
    ];
    TagTaxonomy::new(groups).expect("built-in taxonomy is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counts() {
        let tax = default_taxonomy();
        let counts: Vec<usize> = tax.groups().iter().map(|g| g.tags.len()).collect();
        assert_eq!(counts, [11, 7, 36, 6, 19]);
        assert_eq!(tax.len(), 79);
        assert_eq!(tax.single_level_indices().len(), 24);
    }

    #[test]
    fn default_sector_names() {
        let tax = default_taxonomy();
        let sectors = &tax.group(GroupName::Sectors).tags;
        assert_eq!(sectors.first().map(String::as_str), Some("Agriculture"));
        assert_eq!(sectors.last().map(String::as_str), Some("WASH"));
        assert_eq!(tax.tag_index("Agriculture"), Some(0));
    }

    #[test]
    fn two_level_parents_exist() {
        let tax = default_taxonomy();
        assert!(tax.tag_index("Priority Needs->Expressed by population").is_some());
        assert!(tax.tag_index("Priority Interventions->Expressed by population").is_some());
        assert_eq!(tax.group_of(tax.tag_index("Casualties->Dead").unwrap()), GroupName::Subpillars1d);
    }

    #[test]
    fn sublayer_partition_is_24_36_19() {
        let tax = default_taxonomy();
        let mut counts = [0usize; 3];
        for i in 0..tax.len() {
            counts[tax.group_of(i).sublayer()] += 1;
        }
        assert_eq!(counts, [24, 36, 19]);
    }

    #[test]
    fn json_round_trip() {
        let tax = default_taxonomy();
        assert_eq!(TagTaxonomy::from_json(&tax.to_json()).unwrap(), tax);
    }

    #[test]
    fn rejects_orphan_subpillar() {
        let json = r#"{"groups":[
            {"name":"sectors","level":"single","tags":["Health"]},
            {"name":"pillars_1d","level":"single","tags":["Context"]},
            {"name":"subpillars_1d","level":"two-level","tags":["Economy->Prices"]},
            {"name":"pillars_2d","level":"single","tags":["Impact"]},
            {"name":"subpillars_2d","level":"two-level","tags":["Impact->Impact on people"]}]}"#;
        assert!(matches!(TagTaxonomy::from_json(json), Err(CorpusError::InvalidTaxonomy(_))));
    }

    #[test]
    fn rejects_missing_group() {
        let json = r#"{"groups":[{"name":"sectors","level":"single","tags":["Health"]}]}"#;
        assert!(TagTaxonomy::from_json(json).is_err());
    }
}
