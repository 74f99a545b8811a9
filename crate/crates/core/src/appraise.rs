//! Sentiment distributions, assertions, topic distributions and the
//! comment-driven certainty grade for single evidence articles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotate::{Annotation, AnnotationSet, Sentiment, TopicGroup};
use crate::error::{Error, Result};
use crate::ingest::{filter_by_drug, Corpus, DrugLexicon, Pmid};

const DEFAULT_GRADE_MAPPING: &str = include_str!("../data/grade_mapping.json");

/// What a sentiment count is taken over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    /// Records passing the drug filter.
    Drug(String),
    /// One article.
    Article(Pmid),
    /// An explicit node set, typically a connected component.
    Members(BTreeSet<Pmid>),
}

/// PMIDs an annotation target must belong to for the scope.
pub fn resolve_scope(scope: &Scope, corpus: &Corpus, lexicon: &DrugLexicon) -> Result<BTreeSet<Pmid>> {
    match scope {
        Scope::Drug(group) => Ok(filter_by_drug(corpus, lexicon, group)?.records.keys().copied().collect()),
        Scope::Article(p) => {
            if !corpus.contains(*p) {
                return Err(Error::InvalidArgument(format!("article {p} is not in the corpus")));
            }
            Ok(BTreeSet::from([*p]))
        }
        Scope::Members(m) => Ok(m.clone()),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentCounts {
    pub supportive: usize,
    pub critical: usize,
    pub neutral: usize,
}

impl SentimentCounts {
    pub fn total(&self) -> usize {
        self.supportive + self.critical + self.neutral
    }

    pub fn add(&mut self, s: Sentiment) {
        match s {
            Sentiment::Supportive => self.supportive += 1,
            Sentiment::Critical => self.critical += 1,
            Sentiment::Neutral => self.neutral += 1,
        }
    }

    pub fn get(&self, s: Sentiment) -> usize {
        match s {
            Sentiment::Supportive => self.supportive,
            Sentiment::Critical => self.critical,
            Sentiment::Neutral => self.neutral,
        }
    }
}

impl<'a> FromIterator<&'a Annotation> for SentimentCounts {
    fn from_iter<I: IntoIterator<Item = &'a Annotation>>(iter: I) -> Self {
        let mut c = SentimentCounts::default();
        for a in iter {
            c.add(a.sentiment);
        }
        c
    }
}

/// Counts annotations whose target lies in `scope`.
pub fn sentiment_distribution(
    annotations: &AnnotationSet,
    scope: &Scope,
    corpus: &Corpus,
    lexicon: &DrugLexicon,
) -> Result<SentimentCounts> {
    let members = resolve_scope(scope, corpus, lexicon)?;
    Ok(count_in(annotations, &members))
}

pub fn count_in(annotations: &AnnotationSet, members: &BTreeSet<Pmid>) -> SentimentCounts {
    annotations.iter().filter(|a| members.contains(&a.target_pmid)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assertion {
    Supported,
    Challenged,
    Uncertain,
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assertion::Supported => "Supported",
            Assertion::Challenged => "Challenged",
            Assertion::Uncertain => "Uncertain",
        })
    }
}

pub fn derive_assertion(counts: SentimentCounts) -> Assertion {
    use std::cmp::Ordering::*;
    match counts.supportive.cmp(&counts.critical) {
        Greater => Assertion::Supported,
        Less => Assertion::Challenged,
        Equal => Assertion::Uncertain,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicShare {
    pub tag: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupShare {
    pub group: TopicGroup,
    pub count: usize,
    pub percent: f64,
    /// Level-2 tags, most frequent first.
    pub tags: Vec<TopicShare>,
}

/// Percentages over topic occurrences; every share uses the same
/// denominator, so level-2 values nest under their group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicDistribution {
    pub occurrences: usize,
    pub groups: Vec<GroupShare>,
}

impl TopicDistribution {
    pub fn group(&self, group: TopicGroup) -> Option<&GroupShare> {
        self.groups.iter().find(|g| g.group == group)
    }

    pub fn tag_percent(&self, tag: &str) -> Option<f64> {
        self.groups
            .iter()
            .flat_map(|g| &g.tags)
            .find(|t| t.tag == tag)
            .map(|t| t.percent)
    }
}

pub fn topic_distribution(annotations: &AnnotationSet) -> Result<TopicDistribution> {
    if annotations.is_empty() {
        return Err(Error::EmptyInput("topic distribution needs at least one annotation".into()));
    }
    let mut counts: BTreeMap<TopicGroup, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut occurrences = 0usize;
    for a in annotations.iter() {
        for t in &a.topics {
            *counts.entry(t.group).or_default().entry(t.tag.as_str()).or_default() += 1;
            occurrences += 1;
        }
    }
    let pct = |n: usize| 100.0 * n as f64 / occurrences as f64;
    let groups = TopicGroup::ALL
        .iter()
        .map(|g| {
            let tags_map = counts.remove(g).unwrap_or_default();
            let count = tags_map.values().sum();
            let mut tags: Vec<TopicShare> = tags_map
                .into_iter()
                .map(|(tag, n)| TopicShare {
                    tag: tag.to_string(),
                    count: n,
                    percent: pct(n),
                })
                .collect();
            tags.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tag.cmp(&b.tag)));
            GroupShare {
                group: *g,
                count,
                percent: pct(count),
                tags,
            }
        })
        .collect();
    Ok(TopicDistribution { occurrences, groups })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeTopic {
    StudyDesign,
    PopulationData,
    Analysis,
    ClinicalPracticeRelated,
    AdverseEffect,
}

impl GradeTopic {
    pub const ALL: [GradeTopic; 5] = [
        GradeTopic::StudyDesign,
        GradeTopic::PopulationData,
        GradeTopic::Analysis,
        GradeTopic::ClinicalPracticeRelated,
        GradeTopic::AdverseEffect,
    ];

    /// Maximum magnitude of a topic score.
    pub const WEIGHT: f64 = 2.0;

    pub fn as_str(self) -> &'static str {
        match self {
            GradeTopic::StudyDesign => "study_design",
            GradeTopic::PopulationData => "population_data",
            GradeTopic::Analysis => "analysis",
            GradeTopic::ClinicalPracticeRelated => "clinical_practice_related",
            GradeTopic::AdverseEffect => "adverse_effect",
        }
    }
}

impl fmt::Display for GradeTopic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GradeTopic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GradeTopic::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Vocabulary(format!("unknown grade topic {s:?}")))
    }
}

/// Level-2 topic tag to grade topic. Tags not listed contribute nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradeMapping {
    map: BTreeMap<String, GradeTopic>,
}

impl GradeMapping {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text)?;
        let map = raw
            .into_iter()
            .map(|(tag, topic)| Ok((tag.trim().to_lowercase(), topic.parse()?)))
            .collect::<Result<_>>()?;
        Ok(GradeMapping { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn topic_of(&self, tag: &str) -> Option<GradeTopic> {
        self.map.get(tag).copied()
    }

    /// Distinct grade topics an annotation touches.
    pub fn topics_of(&self, a: &Annotation) -> BTreeSet<GradeTopic> {
        a.topics.iter().filter_map(|t| self.topic_of(&t.tag)).collect()
    }
}

impl Default for GradeMapping {
    fn default() -> Self {
        Self::from_json(DEFAULT_GRADE_MAPPING).expect("bundled grade mapping is valid")
    }
}

/// Numeric value of each sentiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentValues {
    pub supportive: f64,
    pub critical: f64,
    pub neutral: f64,
}

impl SentimentValues {
    /// Values must lie within the topic weight so totals stay in range.
    pub fn new(supportive: f64, critical: f64, neutral: f64) -> Result<Self> {
        for v in [supportive, critical, neutral] {
            if !v.is_finite() || v.abs() > GradeTopic::WEIGHT {
                return Err(Error::InvalidArgument(format!(
                    "sentiment value {v} outside [-{w}, {w}]",
                    w = GradeTopic::WEIGHT
                )));
            }
        }
        Ok(SentimentValues {
            supportive,
            critical,
            neutral,
        })
    }

    pub fn value(&self, s: Sentiment) -> f64 {
        match s {
            Sentiment::Supportive => self.supportive,
            Sentiment::Critical => self.critical,
            Sentiment::Neutral => self.neutral,
        }
    }
}

impl Default for SentimentValues {
    fn default() -> Self {
        SentimentValues {
            supportive: 2.0,
            critical: -2.0,
            neutral: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CertaintyLevel {
    Low,
    ModerateLow,
    Moderate,
    ModerateHigh,
    High,
}

impl fmt::Display for CertaintyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertaintyLevel::Low => "Low",
            CertaintyLevel::ModerateLow => "ModerateLow",
            CertaintyLevel::Moderate => "Moderate",
            CertaintyLevel::ModerateHigh => "ModerateHigh",
            CertaintyLevel::High => "High",
        })
    }
}

pub const MAX_TOTAL: f64 = 10.0;

/// Low [-10,-6), ModerateLow [-6,-2), Moderate [-2,2), ModerateHigh [2,6),
/// High [6,10].
pub fn certainty_level(total: f64) -> Result<CertaintyLevel> {
    if !(-MAX_TOTAL..=MAX_TOTAL).contains(&total) {
        return Err(Error::InvalidArgument(format!("total {total} outside [-10, 10]")));
    }
    Ok(if total < -6.0 {
        CertaintyLevel::Low
    } else if total < -2.0 {
        CertaintyLevel::ModerateLow
    } else if total < 2.0 {
        CertaintyLevel::Moderate
    } else if total < 6.0 {
        CertaintyLevel::ModerateHigh
    } else {
        CertaintyLevel::High
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradingScore {
    pub evidence: Pmid,
    pub comments: usize,
    pub topic_scores: BTreeMap<GradeTopic, f64>,
    pub total: f64,
    pub level: CertaintyLevel,
    /// No annotation mapped onto any grade topic.
    pub ungraded_basis: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Grader {
    pub mapping: GradeMapping,
    pub values: SentimentValues,
}

impl Grader {
    pub fn new(mapping: GradeMapping, values: SentimentValues) -> Self {
        Grader { mapping, values }
    }

    /// Grades one article from the annotations of comments directly on it.
    pub fn grade(&self, evidence: Pmid, annotations: &AnnotationSet, corpus: &Corpus) -> Result<GradingScore> {
        if !corpus.contains(evidence) {
            return Err(Error::InvalidArgument(format!("evidence {evidence} is not in the corpus")));
        }
        let direct: Vec<&Annotation> = annotations.for_target(evidence).collect();
        let mut sums: BTreeMap<GradeTopic, (f64, usize)> = BTreeMap::new();
        for a in &direct {
            let v = self.values.value(a.sentiment);
            for topic in self.mapping.topics_of(a) {
                let e = sums.entry(topic).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        let topic_scores: BTreeMap<GradeTopic, f64> =
            sums.into_iter().map(|(t, (s, n))| (t, s / n as f64)).collect();
        // Means are n-ths of small integers; rounding removes summation noise
        // that could otherwise push a total across an interval boundary.
        let total = (topic_scores.values().sum::<f64>() * 1e9).round() / 1e9;
        Ok(GradingScore {
            evidence,
            comments: direct.len(),
            ungraded_basis: topic_scores.is_empty(),
            level: certainty_level(total)?,
            topic_scores,
            total,
        })
    }
}

/// [`Grader::grade`] with the bundled mapping and default sentiment values.
pub fn grade_evidence(evidence: Pmid, annotations: &AnnotationSet, corpus: &Corpus) -> Result<GradingScore> {
    Grader::default().grade(evidence, annotations, corpus)
}
