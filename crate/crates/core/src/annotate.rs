//! Sentiment vocabulary, the two-level comment-topic taxonomy, and loading
//! of human annotation files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{filter_by_drug, CommentLink, Corpus, DrugLexicon, Pmid};

const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Supportive,
    Critical,
    Neutral,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Supportive, Sentiment::Critical, Sentiment::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Supportive => "supportive",
            Sentiment::Critical => "critical",
            Sentiment::Neutral => "neutral",
        }
    }

    /// Supportive and Critical swap; Neutral stays.
    pub fn flipped(self) -> Sentiment {
        match self {
            Sentiment::Supportive => Sentiment::Critical,
            Sentiment::Critical => Sentiment::Supportive,
            Sentiment::Neutral => Sentiment::Neutral,
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Sentiment::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Vocabulary(format!(
                    "unknown sentiment {s:?} (expected supportive, critical or neutral)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TopicGroup {
    Methodology,
    ClinicalThemes,
    Other,
}

impl TopicGroup {
    pub const ALL: [TopicGroup; 3] = [TopicGroup::Methodology, TopicGroup::ClinicalThemes, TopicGroup::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            TopicGroup::Methodology => "methodology",
            TopicGroup::ClinicalThemes => "clinical themes",
            TopicGroup::Other => "other",
        }
    }
}

impl fmt::Display for TopicGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopicGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "methodology" => Ok(TopicGroup::Methodology),
            "clinicalthemes" | "clinicaltheme" => Ok(TopicGroup::ClinicalThemes),
            "other" => Ok(TopicGroup::Other),
            _ => Err(Error::Taxonomy(format!("unknown level-1 topic {s:?}"))),
        }
    }
}

impl Serialize for TopicGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TopicGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A level-1 group plus a level-2 tag from that group's vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TopicPath {
    pub group: TopicGroup,
    pub tag: String,
}

impl TopicPath {
    pub fn new(group: TopicGroup, tag: impl Into<String>) -> Self {
        TopicPath {
            group,
            tag: normalize_tag(&tag.into()),
        }
    }
}

fn normalize_tag(tag: &str) -> String {
    tag.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl fmt::Display for TopicPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group, self.tag)
    }
}

impl FromStr for TopicPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (group, tag) = s
            .split_once(':')
            .ok_or_else(|| Error::Taxonomy(format!("topic {s:?} is not of the form level1:level2")))?;
        if tag.trim().is_empty() {
            return Err(Error::Taxonomy(format!("topic {s:?} has an empty level-2 tag")));
        }
        Ok(TopicPath::new(group.parse()?, tag))
    }
}

impl Serialize for TopicPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TopicPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Controlled level-2 vocabulary per level-1 group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    groups: IndexMap<TopicGroup, Vec<String>>,
}

impl Taxonomy {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: IndexMap<String, Vec<String>> = serde_json::from_str(text)?;
        let mut groups = IndexMap::new();
        let mut seen = BTreeMap::new();
        for (name, tags) in raw {
            let group: TopicGroup = name.parse()?;
            let tags: Vec<String> = tags.iter().map(|t| normalize_tag(t)).collect();
            for tag in &tags {
                if tag.is_empty() {
                    return Err(Error::Taxonomy(format!("empty level-2 tag under {group}")));
                }
                if let Some(prev) = seen.insert(tag.clone(), group) {
                    return Err(Error::Taxonomy(format!(
                        "level-2 tag {tag:?} listed under both {prev} and {group}"
                    )));
                }
            }
            groups.insert(group, tags);
        }
        Ok(Taxonomy { groups })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn tags(&self, group: TopicGroup) -> &[String] {
        self.groups.get(&group).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn group_of(&self, tag: &str) -> Option<TopicGroup> {
        let tag = normalize_tag(tag);
        self.groups
            .iter()
            .find(|(_, tags)| tags.contains(&tag))
            .map(|(g, _)| *g)
    }

    pub fn validate(&self, path: &TopicPath) -> Result<()> {
        validate_topic(path, self)
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::from_json(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }
}

/// Checks that the level-2 tag belongs to the level-1 group's vocabulary.
pub fn validate_topic(path: &TopicPath, taxonomy: &Taxonomy) -> Result<()> {
    if taxonomy.tags(path.group).contains(&path.tag) {
        return Ok(());
    }
    match taxonomy.group_of(&path.tag) {
        Some(actual) => Err(Error::Taxonomy(format!(
            "tag {:?} belongs to {actual}, not {}",
            path.tag, path.group
        ))),
        None => Err(Error::Taxonomy(format!(
            "unknown level-2 tag {:?} under {}",
            path.tag, path.group
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub comment_pmid: Pmid,
    pub target_pmid: Pmid,
    pub sentiment: Sentiment,
    pub topics: Vec<TopicPath>,
}

impl Annotation {
    pub fn pair(&self) -> CommentLink {
        CommentLink::new(self.comment_pmid, self.target_pmid)
    }

    fn check_shape(&self, taxonomy: &Taxonomy) -> Result<()> {
        if self.topics.is_empty() {
            return Err(Error::Taxonomy("annotation has no topics".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &self.topics {
            validate_topic(t, taxonomy)?;
            if !seen.insert(t) {
                return Err(Error::Taxonomy(format!("duplicate topic {t}")));
            }
        }
        Ok(())
    }
}

/// Annotations keyed by (comment, target); at most one per pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    entries: BTreeMap<CommentLink, Annotation>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an annotation, rejecting a second one for the same pair.
    pub fn insert(&mut self, a: Annotation) -> Result<()> {
        let pair = a.pair();
        if self.entries.contains_key(&pair) {
            return Err(Error::DuplicateAnnotation {
                comment: pair.source,
                target: pair.target,
                row: 0,
            });
        }
        self.entries.insert(pair, a);
        Ok(())
    }

    pub fn get(&self, pair: &CommentLink) -> Option<&Annotation> {
        self.entries.get(pair)
    }

    pub fn sentiment_of(&self, pair: &CommentLink) -> Option<Sentiment> {
        self.entries.get(pair).map(|a| a.sentiment)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Annotation> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Annotations on comments about `target`.
    pub fn for_target(&self, target: Pmid) -> impl Iterator<Item = &Annotation> {
        self.entries.values().filter(move |a| a.target_pmid == target)
    }

    /// Keeps annotations matching the predicate.
    pub fn filtered(&self, mut keep: impl FnMut(&Annotation) -> bool) -> AnnotationSet {
        AnnotationSet {
            entries: self
                .entries
                .iter()
                .filter(|(_, a)| keep(a))
                .map(|(k, a)| (*k, a.clone()))
                .collect(),
        }
    }
}

impl FromIterator<Annotation> for AnnotationSet {
    /// Later duplicates of a pair replace earlier ones; use [`AnnotationSet::insert`]
    /// when duplicates must be rejected.
    fn from_iter<I: IntoIterator<Item = Annotation>>(iter: I) -> Self {
        AnnotationSet {
            entries: iter.into_iter().map(|a| (a.pair(), a)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Abort on the first invalid row.
    #[default]
    Strict,
    /// Skip invalid rows and report them.
    Lenient,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub strictness: Strictness,
    pub include_non_english: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: usize,
    pub loaded: usize,
    /// Rows naming unresolved or excluded records; skipped with a warning.
    pub skipped: Vec<RowIssue>,
    /// Invalid rows collected in lenient mode.
    pub rejected: Vec<RowIssue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationFormat {
    Csv,
    JsonLines,
}

impl AnnotationFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("jsonl" | "json" | "ndjson") => AnnotationFormat::JsonLines,
            _ => AnnotationFormat::Csv,
        }
    }
}

#[derive(Deserialize)]
struct JsonRow {
    comment_pmid: serde_json::Value,
    target_pmid: serde_json::Value,
    sentiment: String,
    topics: Vec<String>,
}

fn pmid_value(v: &serde_json::Value) -> Result<Pmid> {
    match v {
        serde_json::Value::Number(n) => n
            .as_u64()
            .ok_or_else(|| Error::Parse(format!("not a PMID: {n}")))
            .and_then(Pmid::new),
        serde_json::Value::String(s) => s.parse(),
        other => Err(Error::Parse(format!("not a PMID: {other}"))),
    }
}

struct RawRow {
    row: usize,
    comment: String,
    target: String,
    sentiment: String,
    topics: Vec<String>,
}

fn raw_rows<R: BufRead>(input: R, format: AnnotationFormat) -> Result<Vec<std::result::Result<RawRow, RowIssue>>> {
    let mut out = Vec::new();
    match format {
        AnnotationFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(input);
            for (idx, rec) in reader.records().enumerate() {
                let row = idx + 1;
                let rec = match rec {
                    Ok(r) => r,
                    Err(e) => {
                        out.push(Err(RowIssue { row, message: e.to_string() }));
                        continue;
                    }
                };
                if rec.iter().all(|f| f.is_empty()) {
                    continue;
                }
                if idx == 0 && rec.get(0).is_some_and(|f| f.parse::<u64>().is_err()) {
                    continue; // header
                }
                if rec.len() != 4 {
                    out.push(Err(RowIssue {
                        row,
                        message: format!("expected 4 fields, found {}", rec.len()),
                    }));
                    continue;
                }
                out.push(Ok(RawRow {
                    row,
                    comment: rec[0].to_string(),
                    target: rec[1].to_string(),
                    sentiment: rec[2].to_string(),
                    topics: rec[3]
                        .split(';')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(String::from)
                        .collect(),
                }));
            }
        }
        AnnotationFormat::JsonLines => {
            for (idx, line) in input.lines().enumerate() {
                let row = idx + 1;
                let line = line.map_err(|e| Error::io("<annotation stream>", e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<JsonRow>(&line) {
                    Ok(j) => {
                        let id = |v: &serde_json::Value| match v {
                            serde_json::Value::String(s) => s.clone(),
                            other => other.to_string(),
                        };
                        out.push(Ok(RawRow {
                            row,
                            comment: id(&j.comment_pmid),
                            target: id(&j.target_pmid),
                            sentiment: j.sentiment,
                            topics: j.topics,
                        }))
                    }
                    Err(e) => out.push(Err(RowIssue { row, message: e.to_string() })),
                }
            }
        }
    }
    Ok(out)
}

fn parse_row(raw: &RawRow, taxonomy: &Taxonomy) -> Result<Annotation> {
    let comment_pmid = pmid_value(&serde_json::Value::String(raw.comment.clone()))?;
    let target_pmid = pmid_value(&serde_json::Value::String(raw.target.clone()))?;
    let sentiment: Sentiment = raw.sentiment.parse()?;
    let topics = raw
        .topics
        .iter()
        .map(|t| t.parse::<TopicPath>())
        .collect::<Result<Vec<_>>>()?;
    let a = Annotation {
        comment_pmid,
        target_pmid,
        sentiment,
        topics,
    };
    a.check_shape(taxonomy)?;
    Ok(a)
}

/// Reads and validates annotation rows against a corpus.
pub fn read_annotations<R: BufRead>(
    input: R,
    format: AnnotationFormat,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    options: LoadOptions,
) -> Result<(AnnotationSet, LoadReport)> {
    let links: BTreeSet<CommentLink> = corpus.resolved_links().copied().collect();
    let excluded = if options.include_non_english {
        BTreeSet::new()
    } else {
        corpus.non_english()
    };
    let mut set = AnnotationSet::new();
    let mut report = LoadReport::default();
    let strict = options.strictness == Strictness::Strict;

    for item in raw_rows(input, format)? {
        report.rows += 1;
        let raw = match item {
            Ok(r) => r,
            Err(issue) => {
                if strict {
                    return Err(Error::Validation {
                        row: issue.row,
                        message: issue.message,
                    });
                }
                report.rejected.push(issue);
                continue;
            }
        };
        let row = raw.row;
        let outcome = parse_row(&raw, taxonomy).and_then(|a| {
            let pair = a.pair();
            let gone = |p: Pmid| corpus.unresolved.contains(&p) || excluded.contains(&p);
            if gone(pair.source) || gone(pair.target) {
                return Ok(None);
            }
            if !links.contains(&pair) {
                return Err(Error::Validation {
                    row,
                    message: format!("pair {}->{} is not a link in the corpus", pair.source, pair.target),
                });
            }
            if set.get(&pair).is_some() {
                return Err(Error::DuplicateAnnotation {
                    comment: pair.source,
                    target: pair.target,
                    row,
                });
            }
            Ok(Some(a))
        });
        match outcome {
            Ok(Some(a)) => {
                set.insert(a)?;
                report.loaded += 1;
            }
            Ok(None) => {
                let message = format!(
                    "pair {}->{} references an unresolved or excluded record",
                    raw.comment, raw.target
                );
                warn!("annotation row {row}: {message}; skipped");
                report.skipped.push(RowIssue { row, message });
            }
            Err(e) => {
                let e = match e {
                    Error::Validation { .. } | Error::DuplicateAnnotation { .. } => e,
                    other => Error::Validation {
                        row,
                        message: other.to_string(),
                    },
                };
                if strict {
                    return Err(e);
                }
                report.rejected.push(RowIssue {
                    row,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok((set, report))
}

pub fn load_annotations(
    path: &Path,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    options: LoadOptions,
) -> Result<(AnnotationSet, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(
        BufReader::new(file),
        AnnotationFormat::from_path(path),
        corpus,
        taxonomy,
        options,
    )
}

pub fn write_annotations<W: Write>(set: &AnnotationSet, format: AnnotationFormat, out: W) -> Result<()> {
    match format {
        AnnotationFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["comment_pmid", "target_pmid", "sentiment", "topics"])?;
            for a in set.iter() {
                let topics: Vec<String> = a.topics.iter().map(ToString::to_string).collect();
                w.write_record([
                    a.comment_pmid.to_string(),
                    a.target_pmid.to_string(),
                    a.sentiment.to_string(),
                    topics.join(";"),
                ])?;
            }
            w.flush().map_err(|e| Error::io("<annotation stream>", e))
        }
        AnnotationFormat::JsonLines => {
            let mut out = out;
            for a in set.iter() {
                serde_json::to_writer(&mut out, a)?;
                out.write_all(b"\n").map_err(|e| Error::io("<annotation stream>", e))?;
            }
            Ok(())
        }
    }
}

pub fn save_annotations(set: &AnnotationSet, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_annotations(set, AnnotationFormat::from_path(path), &mut file)?;
    file.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupCoverage {
    pub group: String,
    pub annotated: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub annotated: usize,
    pub total: usize,
    pub per_group: Vec<GroupCoverage>,
}

pub fn coverage_ratio(annotated: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        annotated as f64 / total as f64
    }
}

impl CoverageReport {
    pub fn ratio(&self) -> f64 {
        coverage_ratio(self.annotated, self.total)
    }
}

/// Annotated versus total unique resolved links, globally and per drug group
/// when a lexicon is supplied.
pub fn coverage_report(
    annotations: &AnnotationSet,
    corpus: &Corpus,
    lexicon: Option<&DrugLexicon>,
) -> Result<CoverageReport> {
    let count = |c: &Corpus| {
        let pairs: BTreeSet<CommentLink> = c.resolved_links().copied().collect();
        let annotated = pairs.iter().filter(|p| annotations.get(p).is_some()).count();
        (annotated, pairs.len())
    };
    let (annotated, total) = count(corpus);
    let mut per_group = Vec::new();
    if let Some(lex) = lexicon {
        for group in lex.group_names() {
            let (a, t) = count(&filter_by_drug(corpus, lex, group)?);
            per_group.push(GroupCoverage {
                group: group.to_string(),
                annotated: a,
                total: t,
            });
        }
    }
    Ok(CoverageReport {
        annotated,
        total,
        per_group,
    })
}
