//! Dated sentiment series, critical-comment milestones and lead time against
//! guideline releases.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotationSet, Sentiment};
use crate::appraise::{resolve_scope, Scope};
use crate::error::{Error, Result};
use crate::ingest::{Corpus, DrugLexicon, Pmid};

const DEFAULT_GUIDELINES: &str = include_str!("../data/guidelines.json");

/// Mean Gregorian month in days.
pub const DAYS_PER_MONTH: f64 = 30.4375;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub date: NaiveDate,
    pub comment_pmid: Pmid,
    pub sentiment: Sentiment,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SentimentSeries {
    /// Ascending by date, ties by comment PMID.
    pub events: Vec<TimelineEvent>,
    /// Annotated comments with no usable date.
    pub undated: usize,
}

impl SentimentSeries {
    pub fn from_events(mut events: Vec<TimelineEvent>) -> Self {
        events.sort();
        SentimentSeries { events, undated: 0 }
    }

    pub fn critical_count(&self) -> usize {
        self.events.iter().filter(|e| e.sentiment == Sentiment::Critical).count()
    }
}

/// Events for every annotation whose target is in the drug's scope, dated
/// by the commenting record.
pub fn sentiment_series(
    annotations: &AnnotationSet,
    corpus: &Corpus,
    lexicon: &DrugLexicon,
    drug: &str,
) -> Result<SentimentSeries> {
    let scope = resolve_scope(&Scope::Drug(drug.to_string()), corpus, lexicon)?;
    Ok(series_for(annotations, corpus, &scope))
}

pub fn series_for(annotations: &AnnotationSet, corpus: &Corpus, targets: &BTreeSet<Pmid>) -> SentimentSeries {
    let mut events = Vec::new();
    let mut undated = 0;
    for a in annotations.iter().filter(|a| targets.contains(&a.target_pmid)) {
        match corpus.record(a.comment_pmid).and_then(|r| r.effective_date()) {
            Some(date) => events.push(TimelineEvent {
                date,
                comment_pmid: a.comment_pmid,
                sentiment: a.sentiment,
            }),
            None => undated += 1,
        }
    }
    SentimentSeries {
        undated,
        ..SentimentSeries::from_events(events)
    }
}

fn critical_dates(events: &[TimelineEvent]) -> Vec<NaiveDate> {
    let mut d: Vec<NaiveDate> = events
        .iter()
        .filter(|e| e.sentiment == Sentiment::Critical)
        .map(|e| e.date)
        .collect();
    d.sort();
    d
}

pub fn first_critical(events: &[TimelineEvent]) -> Option<NaiveDate> {
    critical_dates(events).first().copied()
}

/// Date of the k-th critical event, k = ceil(n/2).
pub fn half_critical_date(events: &[TimelineEvent]) -> Option<NaiveDate> {
    let dates = critical_dates(events);
    if dates.is_empty() {
        return None;
    }
    Some(dates[dates.len().div_ceil(2) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    For,
    Against,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidelineRef {
    pub drug: String,
    #[serde(default)]
    pub version: String,
    pub release_date: NaiveDate,
    pub polarity: Polarity,
    #[serde(default)]
    pub note: String,
}

/// Guideline releases; the earliest entry per drug is the reference point.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Guidelines {
    entries: Vec<GuidelineRef>,
}

impl Guidelines {
    pub fn new(entries: Vec<GuidelineRef>) -> Self {
        Guidelines { entries }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<GuidelineRef> = serde_json::from_str(text)?;
        if let Some(g) = entries.iter().find(|g| g.drug.trim().is_empty()) {
            return Err(Error::InvalidArgument(format!("guideline entry {} has no drug", g.version)));
        }
        Ok(Guidelines { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn bundled() -> Self {
        Self::from_json(DEFAULT_GUIDELINES).expect("bundled guidelines are valid")
    }

    pub fn entries(&self) -> &[GuidelineRef] {
        &self.entries
    }

    pub fn reference(&self, drug: &str) -> Option<&GuidelineRef> {
        self.entries
            .iter()
            .filter(|g| g.drug.eq_ignore_ascii_case(drug))
            .min_by_key(|g| g.release_date)
    }
}

/// Signed months from `event` to `release`; positive when the event came first.
pub fn months_between(event: NaiveDate, release: NaiveDate) -> f64 {
    (release - event).num_days() as f64 / DAYS_PER_MONTH
}

pub fn lead_months(event: NaiveDate, guideline: &GuidelineRef) -> f64 {
    months_between(event, guideline.release_date)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Milestones {
    pub drug: String,
    pub events: usize,
    pub critical: usize,
    pub undated: usize,
    pub first_critical: Option<NaiveDate>,
    pub half_critical: Option<NaiveDate>,
    pub guideline: Option<GuidelineRef>,
    pub first_critical_lead: Option<f64>,
    pub half_critical_lead: Option<f64>,
}

pub fn milestones(drug: &str, series: &SentimentSeries, guidelines: &Guidelines) -> Milestones {
    let first = first_critical(&series.events);
    let half = half_critical_date(&series.events);
    let guideline = guidelines.reference(drug).cloned();
    let lead = |d: Option<NaiveDate>| Some(lead_months(d?, guideline.as_ref()?));
    Milestones {
        drug: drug.to_string(),
        events: series.events.len(),
        critical: series.critical_count(),
        undated: series.undated,
        first_critical: first,
        half_critical: half,
        first_critical_lead: lead(first),
        half_critical_lead: lead(half),
        guideline,
    }
}
