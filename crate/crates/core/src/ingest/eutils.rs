//! NCBI E-utilities: ESearch/EFetch response parsing and a small
//! rate-limited, caching client.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{NaiveDate, SecondsFormat, Utc};
use log::{debug, info, warn};
use roxmltree::{Document, Node, ParsingOptions};
use sha2::{Digest, Sha256};

use super::{dedupe_links, CommentLink, Corpus, Pmid, PubRecord};
use crate::error::{Error, Result};

pub const DEFAULT_BASE_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
pub const EFETCH_BATCH_SIZE: usize = 200;

/// One page of ESearch results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchPage {
    pub count: usize,
    pub retstart: usize,
    pub retmax: usize,
    pub ids: Vec<Pmid>,
}

fn parse_doc(xml: &str) -> Result<Document<'_>> {
    // NCBI responses carry a DOCTYPE pointing at their DTD.
    let options = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    Document::parse_with_options(xml, options).map_err(|e| Error::Parse(format!("malformed XML: {e}")))
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn children<'a, 'i>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children().filter(move |n| n.has_tag_name(name))
}

fn child_text(node: Node, name: &str) -> Option<String> {
    child(node, name).map(deep_text)
}

/// Concatenated text of a node and its descendants (titles may carry
/// inline markup such as `<i>`).
fn deep_text(node: Node) -> String {
    let raw: String = node
        .descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect();
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn error_banner(root: Node) -> Option<String> {
    child(root, "ERROR").map(deep_text).filter(|s| !s.is_empty())
}

pub fn parse_esearch(xml: &str) -> Result<SearchPage> {
    let doc = parse_doc(xml)?;
    let root = doc.root_element();
    if let Some(msg) = error_banner(root) {
        return Err(Error::Remote(msg));
    }
    if !root.has_tag_name("eSearchResult") {
        return Err(Error::Parse(format!(
            "expected eSearchResult, found {}",
            root.tag_name().name()
        )));
    }
    let num = |name: &str| -> Result<usize> {
        match child_text(root, name) {
            None => Ok(0),
            Some(t) => t
                .parse()
                .map_err(|_| Error::Parse(format!("bad {name} value {t:?}"))),
        }
    };
    let ids = match child(root, "IdList") {
        None => Vec::new(),
        Some(list) => children(list, "Id")
            .map(|n| deep_text(n).parse::<Pmid>())
            .collect::<Result<_>>()?,
    };
    Ok(SearchPage {
        count: num("Count")?,
        retstart: num("RetStart")?,
        retmax: num("RetMax")?,
        ids,
    })
}

fn month_number(text: &str) -> Option<u32> {
    let t = text.trim();
    if let Ok(n) = t.parse::<u32>() {
        return (1..=12).contains(&n).then_some(n);
    }
    const NAMES: [&str; 12] = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ];
    let lower = t.to_ascii_lowercase();
    NAMES
        .iter()
        .position(|m| lower.starts_with(m))
        .map(|i| i as u32 + 1)
}

fn season_month(text: &str) -> Option<u32> {
    match text.trim().to_ascii_lowercase().as_str() {
        "winter" => Some(1),
        "spring" => Some(3),
        "summer" => Some(6),
        "fall" | "autumn" => Some(9),
        _ => None,
    }
}

/// Builds a date at day precision, normalizing missing or invalid parts to
/// the first day of the enclosing period.
fn normalize_date(year: i32, month: Option<u32>, day: Option<u32>) -> Option<NaiveDate> {
    let month = month.unwrap_or(1);
    let first = NaiveDate::from_ymd_opt(year, month, 1)?;
    match day {
        Some(d) => Some(NaiveDate::from_ymd_opt(year, month, d).unwrap_or(first)),
        None => Some(first),
    }
}

/// Parses a PubMed date element (`PubDate`, `ArticleDate`, ...).
fn parse_pubmed_date(node: Node) -> Option<NaiveDate> {
    if let Some(year) = child_text(node, "Year").and_then(|y| y.trim().parse::<i32>().ok()) {
        let month = child_text(node, "Month").and_then(|m| month_number(&m));
        let day = child_text(node, "Day").and_then(|d| d.trim().parse::<u32>().ok());
        let month = month.or_else(|| child_text(node, "Season").and_then(|s| season_month(&s)));
        return normalize_date(year, month, if month.is_some() { day } else { None });
    }
    // MedlineDate, e.g. "2020 Mar-Apr" or "2019 Dec-2020 Jan"
    let medline = child_text(node, "MedlineDate")?;
    let mut tokens = medline.split(|c: char| c.is_whitespace() || c == '-');
    let year = tokens.next()?.trim().parse::<i32>().ok()?;
    let month = tokens
        .next()
        .and_then(|m| month_number(m).or_else(|| season_month(m)));
    normalize_date(year, month, None)
}

fn parse_article(article: Node) -> Result<(PubRecord, Vec<CommentLink>)> {
    let citation = child(article, "MedlineCitation")
        .ok_or_else(|| Error::Parse("PubmedArticle without MedlineCitation".into()))?;
    let pmid: Pmid = child_text(citation, "PMID")
        .ok_or_else(|| Error::Parse("MedlineCitation without PMID".into()))?
        .parse()?;
    let mut record = PubRecord::new(pmid, String::new());

    if let Some(art) = child(citation, "Article") {
        record.title = child_text(art, "ArticleTitle").unwrap_or_default();
        if let Some(abs) = child(art, "Abstract") {
            let parts: Vec<String> = children(abs, "AbstractText").map(deep_text).collect();
            if !parts.is_empty() {
                record.abstract_text = Some(parts.join(" "));
            }
        }
        if let Some(journal) = child(art, "Journal") {
            record.journal = child_text(journal, "Title").unwrap_or_default();
            record.journal_date = child(journal, "JournalIssue")
                .and_then(|ji| child(ji, "PubDate"))
                .and_then(parse_pubmed_date);
        }
        record.epub_date = children(art, "ArticleDate")
            .find(|n| n.attribute("DateType").is_none_or(|t| t.eq_ignore_ascii_case("Electronic")))
            .and_then(parse_pubmed_date);
        if let Some(lang) = child_text(art, "Language") {
            record.language = lang;
        }
        if let Some(types) = child(art, "PublicationTypeList") {
            record.pub_types = children(types, "PublicationType").map(deep_text).collect();
        }
    }

    let mut links = Vec::new();
    if let Some(list) = child(citation, "CommentsCorrectionsList") {
        for cc in children(list, "CommentsCorrections") {
            let Some(other) = child_text(cc, "PMID") else {
                continue;
            };
            let other: Pmid = match other.parse() {
                Ok(p) => p,
                Err(_) => {
                    warn!("skipping unparsable CommentsCorrections PMID {other:?} in {pmid}");
                    continue;
                }
            };
            let link = match cc.attribute("RefType") {
                Some("CommentOn") => CommentLink::new(pmid, other),
                Some("CommentIn") => CommentLink::new(other, pmid),
                _ => continue,
            };
            if !link.is_self_loop() {
                links.push(link);
            }
        }
    }
    Ok((record, links))
}

/// Parses an EFetch `PubmedArticleSet` document into records and the comment
/// links they declare.
pub fn parse_efetch(xml: &str) -> Result<(Vec<PubRecord>, Vec<CommentLink>)> {
    let doc = parse_doc(xml)?;
    let root = doc.root_element();
    if let Some(msg) = error_banner(root) {
        return Err(Error::Remote(msg));
    }
    if !root.has_tag_name("PubmedArticleSet") {
        return Err(Error::Parse(format!(
            "expected PubmedArticleSet, found {}",
            root.tag_name().name()
        )));
    }
    let mut records = Vec::new();
    let mut links = Vec::new();
    for article in children(root, "PubmedArticle") {
        let (record, mut l) = parse_article(article)?;
        records.push(record);
        links.append(&mut l);
    }
    Ok((records, links))
}

/// Records and links recovered for a set of requested PMIDs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchedBatch {
    pub records: Vec<PubRecord>,
    pub links: Vec<CommentLink>,
    /// Requested PMIDs that the response did not contain.
    pub unresolved: BTreeSet<Pmid>,
}

impl FetchedBatch {
    fn from_parsed(requested: &[Pmid], records: Vec<PubRecord>, links: Vec<CommentLink>) -> Self {
        let returned: BTreeSet<Pmid> = records.iter().map(|r| r.pmid).collect();
        let unresolved = requested
            .iter()
            .filter(|p| !returned.contains(p))
            .copied()
            .collect();
        FetchedBatch {
            records,
            links,
            unresolved,
        }
    }

    fn merge(&mut self, other: FetchedBatch) {
        self.records.extend(other.records);
        self.links.extend(other.links);
        self.unresolved.extend(other.unresolved);
    }
}

/// A fetched document plus the moment it was originally retrieved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub body: String,
    pub fetched_at: String,
}

/// Minimal GET abstraction so the client can run against a cache or a stub.
pub trait Transport: Sync {
    fn get(&self, url: &str) -> Result<Fetched>;
}

/// Token-bucket style limiter: at most one request per interval, shared by
/// every worker holding a reference.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_second(rate: f64) -> Self {
        let rate = if rate.is_finite() && rate > 0.0 { rate } else { 1.0 };
        RateLimiter {
            interval: Duration::from_secs_f64(1.0 / rate),
            next: Mutex::new(None),
        }
    }

    /// NCBI policy: 3 requests/s anonymously, 10 with an API key.
    pub fn ncbi_default(has_api_key: bool) -> Self {
        Self::per_second(if has_api_key { 10.0 } else { 3.0 })
    }

    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl HttpTransport {
    pub fn new(limiter: RateLimiter) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("ecn/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpTransport { client, limiter })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Fetched> {
        self.limiter.acquire();
        debug!("GET {}", redact(url));
        let resp = self
            .client
            .get(url)
            .send()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Transport(format!("HTTP {status} for {}", redact(url))));
        }
        let body = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        Ok(Fetched {
            body,
            fetched_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        })
    }
}

fn redact(url: &str) -> String {
    strip_api_key(url)
}

/// Removes the `api_key` query parameter so cache keys and logs do not
/// depend on credentials.
fn strip_api_key(url: &str) -> String {
    match url.split_once('?') {
        None => url.to_string(),
        Some((base, query)) => {
            let kept: Vec<&str> = query
                .split('&')
                .filter(|kv| !kv.starts_with("api_key="))
                .collect();
            if kept.is_empty() {
                base.to_string()
            } else {
                format!("{base}?{}", kept.join("&"))
            }
        }
    }
}

/// Response cache keyed by the SHA-256 of the request URL (API key removed).
pub struct CachedTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> CachedTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CachedTransport { inner, dir })
    }

    pub fn cache_key(url: &str) -> String {
        let digest = Sha256::digest(strip_api_key(url).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn paths(&self, url: &str) -> (PathBuf, PathBuf) {
        let key = Self::cache_key(url);
        (
            self.dir.join(format!("{key}.xml")),
            self.dir.join(format!("{key}.meta")),
        )
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Stores a response as if it had been fetched; used to seed caches.
    pub fn store(&self, url: &str, fetched: &Fetched) -> Result<()> {
        let (body_path, meta_path) = self.paths(url);
        std::fs::write(&body_path, &fetched.body).map_err(|e| Error::io(&body_path, e))?;
        std::fs::write(&meta_path, &fetched.fetched_at).map_err(|e| Error::io(&meta_path, e))
    }
}

impl<T: Transport> Transport for CachedTransport<T> {
    fn get(&self, url: &str) -> Result<Fetched> {
        let (body_path, meta_path) = self.paths(url);
        if body_path.exists() {
            debug!("cache hit {}", body_path.display());
            let body = std::fs::read_to_string(&body_path).map_err(|e| Error::io(&body_path, e))?;
            let fetched_at = std::fs::read_to_string(&meta_path)
                .map(|s| s.trim().to_string())
                .unwrap_or_default();
            return Ok(Fetched { body, fetched_at });
        }
        let fetched = self.inner.get(url)?;
        self.store(url, &fetched)?;
        Ok(fetched)
    }
}

/// ESearch/EFetch client over any [`Transport`].
pub struct EutilsClient<T> {
    transport: T,
    base_url: String,
    api_key: Option<String>,
    max_retries: u32,
    retry_delay: Duration,
    /// Earliest retrieval timestamp seen so far; becomes corpus provenance.
    earliest_fetch: Mutex<Option<String>>,
}

impl<T: Transport> EutilsClient<T> {
    pub fn new(transport: T) -> Self {
        EutilsClient {
            transport,
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: None,
            max_retries: 2,
            retry_delay: Duration::from_millis(500),
            earliest_fetch: Mutex::new(None),
        }
    }

    pub fn with_base_url(mut self, base: impl Into<String>) -> Self {
        self.base_url = base.into().trim_end_matches('/').to_string();
        self
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key.filter(|k| !k.is_empty());
        self
    }

    pub fn with_retries(mut self, max_retries: u32, delay: Duration) -> Self {
        self.max_retries = max_retries;
        self.retry_delay = delay;
        self
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn url(&self, endpoint: &str, params: &[(&str, String)]) -> String {
        let mut all: Vec<(&str, String)> = vec![("db", "pubmed".into()), ("retmode", "xml".into())];
        all.extend(params.iter().cloned());
        if let Some(key) = &self.api_key {
            all.push(("api_key", key.clone()));
        }
        let url = reqwest::Url::parse_with_params(&format!("{}/{endpoint}", self.base_url), &all)
            .expect("base URL and parameters form a valid URL");
        url.to_string()
    }

    fn get(&self, url: &str) -> Result<String> {
        let mut attempt = 0;
        loop {
            match self.transport.get(url) {
                Ok(fetched) => {
                    let mut earliest = self.earliest_fetch.lock().unwrap_or_else(|e| e.into_inner());
                    if !fetched.fetched_at.is_empty()
                        && earliest.as_deref().is_none_or(|e| fetched.fetched_at.as_str() < e)
                    {
                        *earliest = Some(fetched.fetched_at.clone());
                    }
                    return Ok(fetched.body);
                }
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    attempt += 1;
                    warn!("retrying after transport error ({attempt}/{}): {e}", self.max_retries);
                    std::thread::sleep(self.retry_delay * attempt);
                }
                Err(e) => return Err(e),
            }
        }
    }

    pub fn earliest_fetch(&self) -> Option<String> {
        self.earliest_fetch
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn esearch_page(&self, query: &str, page_size: usize, page: usize) -> Result<SearchPage> {
        if page_size == 0 {
            return Err(Error::InvalidArgument("page size must be positive".into()));
        }
        let url = self.url(
            "esearch.fcgi",
            &[
                ("term", query.to_string()),
                ("retstart", (page * page_size).to_string()),
                ("retmax", page_size.to_string()),
            ],
        );
        parse_esearch(&self.get(&url)?)
    }

    /// PMIDs of one result page, in NCBI order.
    pub fn esearch(&self, query: &str, page_size: usize, page: usize) -> Result<Vec<Pmid>> {
        Ok(self.esearch_page(query, page_size, page)?.ids)
    }

    /// All PMIDs for a query, up to `max` when given.
    pub fn search_all(&self, query: &str, page_size: usize, max: Option<usize>) -> Result<Vec<Pmid>> {
        let mut ids = Vec::new();
        let mut page = 0;
        loop {
            let want = max.map_or(page_size, |m| page_size.min(m - ids.len()));
            if want == 0 {
                break;
            }
            let result = self.esearch_page(query, page_size, page)?;
            let got = result.ids.len();
            ids.extend(result.ids.into_iter().take(want));
            page += 1;
            if got < page_size || page * page_size >= result.count {
                break;
            }
            if max.is_some_and(|m| ids.len() >= m) {
                break;
            }
        }
        info!("esearch {query:?}: {} ids", ids.len());
        Ok(ids)
    }

    pub fn efetch_xml(&self, pmids: &[Pmid]) -> Result<String> {
        let ids: Vec<String> = pmids.iter().map(Pmid::to_string).collect();
        let url = self.url("efetch.fcgi", &[("id", ids.join(","))]);
        self.get(&url)
    }
}

/// Fetches and parses records in batches of [`EFETCH_BATCH_SIZE`], with up to
/// `workers` batches in flight. PMIDs missing from responses are reported as
/// unresolved rather than failing the run.
pub fn efetch_and_parse<T: Transport>(
    client: &EutilsClient<T>,
    pmids: &[Pmid],
    workers: usize,
) -> Result<FetchedBatch> {
    if pmids.is_empty() {
        return Err(Error::InvalidArgument("no PMIDs to fetch".into()));
    }
    let batches: Vec<&[Pmid]> = pmids.chunks(EFETCH_BATCH_SIZE).collect();
    let workers = workers.clamp(1, batches.len());
    let results: Vec<Mutex<Option<Result<FetchedBatch>>>> =
        batches.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = {
                    let mut n = next.lock().unwrap_or_else(|e| e.into_inner());
                    let idx = *n;
                    *n += 1;
                    idx
                };
                let Some(batch) = batches.get(idx) else {
                    break;
                };
                let outcome = client.efetch_xml(batch).and_then(|xml| {
                    let (records, links) = parse_efetch(&xml)?;
                    Ok(FetchedBatch::from_parsed(batch, records, links))
                });
                *results[idx].lock().unwrap_or_else(|e| e.into_inner()) = Some(outcome);
            });
        }
    });
    let mut out = FetchedBatch::default();
    for slot in results {
        let outcome = slot
            .into_inner()
            .unwrap_or_else(|e| e.into_inner())
            .expect("every batch was processed");
        out.merge(outcome?);
    }
    if !out.unresolved.is_empty() {
        warn!("{} PMIDs not found in EFetch responses", out.unresolved.len());
    }
    Ok(out)
}

impl<T: Transport> EutilsClient<T> {
    /// Runs every query, fetches the hits, then fetches the far endpoints of
    /// the discovered comment links once so both sides of each pair have
    /// records. Whatever still cannot be fetched lands in `unresolved`.
    pub fn fetch_corpus(&self, queries: &[String], max: Option<usize>, workers: usize) -> Result<Corpus> {
        let mut order: Vec<Pmid> = Vec::new();
        let mut seen = BTreeSet::new();
        for q in queries {
            for id in self.search_all(q, 500, max)? {
                if seen.insert(id) {
                    order.push(id);
                }
            }
        }
        let mut corpus = Corpus::new();
        corpus.provenance.queries = queries.to_vec();
        if order.is_empty() {
            corpus.provenance.fetched_at = self.earliest_fetch();
            return Ok(corpus);
        }
        let mut fetched = efetch_and_parse(self, &order, workers)?;

        let have: BTreeSet<Pmid> = fetched.records.iter().map(|r| r.pmid).collect();
        let missing: Vec<Pmid> = fetched
            .links
            .iter()
            .flat_map(|l| [l.source, l.target])
            .filter(|p| !have.contains(p) && !fetched.unresolved.contains(p))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !missing.is_empty() {
            info!("fetching {} linked records", missing.len());
            fetched.merge(efetch_and_parse(self, &missing, workers)?);
        }

        let mut by_pmid: BTreeMap<Pmid, PubRecord> = BTreeMap::new();
        for r in fetched.records {
            by_pmid.entry(r.pmid).or_insert(r);
        }
        for r in by_pmid.into_values() {
            corpus.insert_record(r);
        }
        for l in dedupe_links(&fetched.links) {
            corpus.push_link(l);
        }
        corpus.unresolved.extend(
            fetched
                .unresolved
                .into_iter()
                .filter(|p| !corpus.records.contains_key(p)),
        );
        corpus.mark_dangling();
        corpus.provenance.fetched_at = self.earliest_fetch();
        Ok(corpus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn p(v: u64) -> Pmid {
        Pmid::new(v).unwrap()
    }

    #[test]
    fn month_names_and_numbers() {
        assert_eq!(month_number("Mar"), Some(3));
        assert_eq!(month_number("03"), Some(3));
        assert_eq!(month_number("December"), Some(12));
        assert_eq!(month_number("13"), None);
    }

    #[test]
    fn partial_dates_normalize_to_first_day() {
        assert_eq!(normalize_date(2020, Some(5), None), NaiveDate::from_ymd_opt(2020, 5, 1));
        assert_eq!(normalize_date(2020, None, None), NaiveDate::from_ymd_opt(2020, 1, 1));
        assert_eq!(normalize_date(2021, Some(2), Some(30)), NaiveDate::from_ymd_opt(2021, 2, 1));
    }

    #[test]
    fn medline_date_uses_first_month() {
        let xml = "<PubDate><MedlineDate>2020 Mar-Apr</MedlineDate></PubDate>";
        let doc = Document::parse(xml).unwrap();
        assert_eq!(
            parse_pubmed_date(doc.root_element()),
            NaiveDate::from_ymd_opt(2020, 3, 1)
        );
    }

    #[test]
    fn api_key_is_stripped_from_cache_key() {
        let a = CachedTransport::<HttpTransport>::cache_key("http://x/efetch.fcgi?db=pubmed&id=1&api_key=SECRET");
        let b = CachedTransport::<HttpTransport>::cache_key("http://x/efetch.fcgi?db=pubmed&id=1");
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }

    struct Stub {
        calls: AtomicUsize,
        fail_first: usize,
    }

    impl Transport for Stub {
        fn get(&self, url: &str) -> Result<Fetched> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                return Err(Error::Transport("connection reset".into()));
            }
            let body = if url.contains("esearch") {
                "<eSearchResult><Count>1</Count><RetMax>1</RetMax><RetStart>0</RetStart><IdList><Id>7</Id></IdList></eSearchResult>".to_string()
            } else {
                "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>7</PMID><Article><ArticleTitle>T</ArticleTitle></Article></MedlineCitation></PubmedArticle></PubmedArticleSet>".to_string()
            };
            Ok(Fetched {
                body,
                fetched_at: format!("2021-07-21T00:00:0{n}Z"),
            })
        }
    }

    #[test]
    fn transport_errors_are_retried() {
        let client = EutilsClient::new(Stub {
            calls: AtomicUsize::new(0),
            fail_first: 2,
        })
        .with_retries(2, Duration::from_millis(1));
        assert_eq!(client.esearch("q", 20, 0).unwrap(), vec![p(7)]);
        assert_eq!(client.transport().calls.load(Ordering::SeqCst), 3);

        let client = EutilsClient::new(Stub {
            calls: AtomicUsize::new(0),
            fail_first: 5,
        })
        .with_retries(1, Duration::from_millis(1));
        assert!(client.esearch("q", 20, 0).unwrap_err().is_retryable());
    }

    #[test]
    fn cache_serves_repeat_requests() {
        let dir = tempfile::tempdir().unwrap();
        let cached = CachedTransport::new(
            Stub {
                calls: AtomicUsize::new(0),
                fail_first: 0,
            },
            dir.path(),
        )
        .unwrap();
        let client = EutilsClient::new(cached);
        let first = client.fetch_corpus(&["q".into()], None, 2).unwrap();
        let second = client.fetch_corpus(&["q".into()], None, 2).unwrap();
        assert_eq!(first, second);
        assert_eq!(client.transport().inner.calls.load(Ordering::SeqCst), 2);
        assert_eq!(first.provenance.fetched_at.as_deref(), Some("2021-07-21T00:00:00Z"));
    }

    #[test]
    fn urls_carry_pubmed_db_and_paging() {
        let client = EutilsClient::new(Stub {
            calls: AtomicUsize::new(0),
            fail_first: 0,
        })
        .with_api_key(Some("K".into()));
        let url = client.url("esearch.fcgi", &[("term", "a and b".into()), ("retstart", "40".into())]);
        assert!(url.starts_with("https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi?db=pubmed&retmode=xml"));
        assert!(url.contains("retstart=40"));
        assert!(url.contains("api_key=K"));
        assert!(!strip_api_key(&url).contains("api_key"));
    }

    #[test]
    fn limiter_spaces_requests() {
        let lim = RateLimiter::per_second(50.0);
        let start = Instant::now();
        for _ in 0..4 {
            lim.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(55));
    }
}
