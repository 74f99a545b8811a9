use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.json");

/// Drug groups and the title synonyms that place a record into each group.
///
/// Group order is preserved from the source file; reports follow it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IndexMap<String, Vec<String>>", into = "IndexMap<String, Vec<String>>")]
pub struct DrugLexicon {
    groups: IndexMap<String, Vec<String>>,
}

impl DrugLexicon {
    pub fn new(groups: IndexMap<String, Vec<String>>) -> Result<Self> {
        for (name, synonyms) in &groups {
            if name.trim().is_empty() {
                return Err(Error::InvalidArgument("drug group name is empty".into()));
            }
            if !synonyms.iter().any(|s| !s.trim().is_empty()) {
                return Err(Error::InvalidArgument(format!(
                    "drug group {name:?} needs at least one non-empty synonym"
                )));
            }
        }
        Ok(DrugLexicon { groups })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let groups: IndexMap<String, Vec<String>> = serde_json::from_str(text)?;
        Self::new(groups)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn group_names(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    /// Resolves a group by exact name, falling back to a case-insensitive match.
    pub fn resolve(&self, group: &str) -> Result<(&str, &[String])> {
        if let Some((k, v)) = self.groups.get_key_value(group) {
            return Ok((k.as_str(), v.as_slice()));
        }
        self.groups
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(group))
            .map(|(k, v)| (k.as_str(), v.as_slice()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown drug group {group:?}")))
    }

    pub fn synonyms(&self, group: &str) -> Result<&[String]> {
        self.resolve(group).map(|(_, s)| s)
    }

    /// Case-insensitive substring match of any synonym against `title`.
    pub fn title_matches(&self, group: &str, title: &str) -> Result<bool> {
        let synonyms = self.synonyms(group)?;
        Ok(matches_any(synonyms, title))
    }
}

pub(crate) fn matches_any(synonyms: &[String], title: &str) -> bool {
    let title = title.to_lowercase();
    synonyms
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .any(|s| title.contains(&s.to_lowercase()))
}

impl Default for DrugLexicon {
    fn default() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

impl TryFrom<IndexMap<String, Vec<String>>> for DrugLexicon {
    type Error = Error;

    fn try_from(groups: IndexMap<String, Vec<String>>) -> Result<Self> {
        Self::new(groups)
    }
}

impl From<DrugLexicon> for IndexMap<String, Vec<String>> {
    fn from(l: DrugLexicon) -> Self {
        l.groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lexicon_has_six_groups_in_order() {
        let lex = DrugLexicon::default();
        let names: Vec<_> = lex.group_names().collect();
        assert_eq!(
            names,
            ["corticosteroid", "remdesivir", "HCQ", "LPV/r", "ivermectin", "IL-6 receptor blockers"]
        );
        assert!(lex.synonyms("LPV/r").unwrap().contains(&"ritonavir".to_string()));
    }

    #[test]
    fn matching_is_case_insensitive() {
        let lex = DrugLexicon::default();
        assert!(lex.title_matches("HCQ", "HYDROXYCHLOROQUINE and azithromycin as a treatment").unwrap());
        assert!(!lex.title_matches("remdesivir", "Tocilizumab works").unwrap());
        assert!(lex.title_matches("hcq", "hydroxychloroquine").unwrap());
    }

    #[test]
    fn unknown_group_and_empty_synonyms_rejected() {
        let lex = DrugLexicon::default();
        assert!(matches!(lex.synonyms("aspirin"), Err(Error::InvalidArgument(_))));
        assert!(DrugLexicon::from_json(r#"{"x": ["", " "]}"#).is_err());
        assert!(DrugLexicon::from_json(r#"{"x": []}"#).is_err());
    }
}
