//! Corpus acquisition: PubMed records, comment linkages, persistence and
//! drug-scoped filtering.

mod eutils;
mod filter;
mod lexicon;
mod query;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eutils::{
    efetch_and_parse, parse_efetch, parse_esearch, CachedTransport, EutilsClient, Fetched, FetchedBatch,
    HttpTransport, RateLimiter, SearchPage, Transport, DEFAULT_BASE_URL, EFETCH_BATCH_SIZE,
};
pub use filter::filter_by_drug;
pub use lexicon::DrugLexicon;
pub use query::{build_query, CommentDirection};
pub use store::{load_corpus, read_corpus, save_corpus, write_corpus, SCHEMA_VERSION};

/// PubMed identifier. Always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Pmid(u64);

impl Pmid {
    pub fn new(value: u64) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidArgument("PMID must be positive".into()));
        }
        Ok(Pmid(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Pmid {
    type Error = Error;

    fn try_from(value: u64) -> Result<Self> {
        Pmid::new(value)
    }
}

impl From<Pmid> for u64 {
    fn from(p: Pmid) -> u64 {
        p.0
    }
}

impl fmt::Display for Pmid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Pmid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: u64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("not a PMID: {s:?}")))?;
        Pmid::new(v)
    }
}

/// One PubMed publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PubRecord {
    pub pmid: Pmid,
    pub title: String,
    #[serde(default, rename = "abstract", skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epub_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub journal_date: Option<NaiveDate>,
    #[serde(default)]
    pub journal: String,
    #[serde(default)]
    pub pub_types: BTreeSet<String>,
    #[serde(default = "default_language")]
    pub language: String,
}

fn default_language() -> String {
    "eng".to_string()
}

impl PubRecord {
    pub fn new(pmid: Pmid, title: impl Into<String>) -> Self {
        PubRecord {
            pmid,
            title: title.into(),
            abstract_text: None,
            epub_date: None,
            journal_date: None,
            journal: String::new(),
            pub_types: BTreeSet::new(),
            language: default_language(),
        }
    }

    /// Electronic publication date when present, otherwise the journal issue date.
    pub fn effective_date(&self) -> Option<NaiveDate> {
        self.epub_date.or(self.journal_date)
    }

    pub fn is_english(&self) -> bool {
        matches!(self.language.to_ascii_lowercase().as_str(), "eng" | "en")
    }

    pub fn has_pub_type(&self, tag: &str) -> bool {
        self.pub_types.iter().any(|t| t.eq_ignore_ascii_case(tag))
    }
}

/// Directed relation from a comment to the article it comments on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CommentLink {
    pub source: Pmid,
    pub target: Pmid,
}

impl CommentLink {
    pub fn new(source: Pmid, target: Pmid) -> Self {
        CommentLink { source, target }
    }

    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

/// Removes repeated (source, target) pairs, keeping the first occurrence.
pub fn dedupe_links(links: &[CommentLink]) -> Vec<CommentLink> {
    let mut seen = std::collections::HashSet::with_capacity(links.len());
    links.iter().copied().filter(|l| seen.insert(*l)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub queries: Vec<String>,
    pub fetched_at: Option<String>,
}

/// A normalized set of records and comment links.
///
/// Link endpoints either resolve to a record or are listed in `unresolved`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: BTreeMap<Pmid, PubRecord>,
    pub links: Vec<CommentLink>,
    pub unresolved: BTreeSet<Pmid>,
    /// Records retained only because they sit at the far end of a kept link.
    pub context_only: BTreeSet<Pmid>,
    pub provenance: Provenance,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_record(&mut self, record: PubRecord) {
        self.unresolved.remove(&record.pmid);
        self.records.insert(record.pmid, record);
    }

    /// Adds a link, silently dropping self-loops.
    pub fn push_link(&mut self, link: CommentLink) {
        if !link.is_self_loop() {
            self.links.push(link);
        }
    }

    pub fn record(&self, pmid: Pmid) -> Option<&PubRecord> {
        self.records.get(&pmid)
    }

    pub fn contains(&self, pmid: Pmid) -> bool {
        self.records.contains_key(&pmid)
    }

    /// Moves every link endpoint without a record into `unresolved`.
    pub fn mark_dangling(&mut self) {
        for link in &self.links {
            for p in [link.source, link.target] {
                if !self.records.contains_key(&p) {
                    self.unresolved.insert(p);
                }
            }
        }
    }

    /// Links whose endpoints both resolve to records.
    pub fn resolved_links(&self) -> impl Iterator<Item = &CommentLink> + '_ {
        self.links
            .iter()
            .filter(|l| self.records.contains_key(&l.source) && self.records.contains_key(&l.target))
    }

    /// Copy with duplicate links removed.
    pub fn deduped(&self) -> Corpus {
        Corpus {
            links: dedupe_links(&self.links),
            ..self.clone()
        }
    }

    /// The view used for analysis: non-English records and their links are
    /// dropped unless `include_non_english` is set.
    pub fn analysis_view(&self, include_non_english: bool) -> Corpus {
        if include_non_english {
            return self.clone();
        }
        let excluded: BTreeSet<Pmid> = self
            .records
            .values()
            .filter(|r| !r.is_english())
            .map(|r| r.pmid)
            .collect();
        if excluded.is_empty() {
            return self.clone();
        }
        Corpus {
            records: self
                .records
                .iter()
                .filter(|(p, _)| !excluded.contains(p))
                .map(|(p, r)| (*p, r.clone()))
                .collect(),
            links: self
                .links
                .iter()
                .filter(|l| !excluded.contains(&l.source) && !excluded.contains(&l.target))
                .copied()
                .collect(),
            unresolved: self.unresolved.clone(),
            context_only: self.context_only.difference(&excluded).copied().collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// PMIDs of non-English records (retained, but excluded from analysis by default).
    pub fn non_english(&self) -> BTreeSet<Pmid> {
        self.records
            .values()
            .filter(|r| !r.is_english())
            .map(|r| r.pmid)
            .collect()
    }
}
