//! JSON-lines corpus persistence.
//!
//! Layout: one header line, then records in PMID order, then links in
//! stored order, then unresolved PMIDs in ascending order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CommentLink, Corpus, Pmid, Provenance, PubRecord};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Header {
        schema: u32,
        #[serde(default)]
        query: Vec<String>,
        #[serde(default)]
        fetched_at: Option<String>,
    },
    Record {
        #[serde(flatten)]
        record: PubRecord,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        context_only: bool,
    },
    Link {
        source: Pmid,
        target: Pmid,
    },
    Unresolved {
        pmid: Pmid,
    },
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    let mut emit = |line: &Line| -> Result<()> {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n").map_err(|e| Error::io("<corpus stream>", e))
    };
    emit(&Line::Header {
        schema: SCHEMA_VERSION,
        query: corpus.provenance.queries.clone(),
        fetched_at: corpus.provenance.fetched_at.clone(),
    })?;
    for record in corpus.records.values() {
        emit(&Line::Record {
            record: record.clone(),
            context_only: corpus.context_only.contains(&record.pmid),
        })?;
    }
    for link in &corpus.links {
        emit(&Line::Link {
            source: link.source,
            target: link.target,
        })?;
    }
    for pmid in &corpus.unresolved {
        emit(&Line::Unresolved { pmid: *pmid })?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Corpus> {
    let mut corpus = Corpus::new();
    let mut saw_header = false;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<corpus stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("corpus line {lineno}: {e}")))?;
        match parsed {
            Line::Header {
                schema,
                query,
                fetched_at,
            } => {
                if schema != SCHEMA_VERSION {
                    return Err(Error::SchemaVersion {
                        found: schema,
                        expected: SCHEMA_VERSION,
                    });
                }
                if saw_header {
                    return Err(Error::Parse(format!("corpus line {lineno}: second header")));
                }
                saw_header = true;
                corpus.provenance = Provenance {
                    queries: query,
                    fetched_at,
                };
            }
            _ if !saw_header => {
                return Err(Error::Parse("corpus file must start with a header line".into()));
            }
            Line::Record {
                record,
                context_only,
            } => {
                if corpus.records.contains_key(&record.pmid) {
                    return Err(Error::Parse(format!(
                        "corpus line {lineno}: duplicate record {}",
                        record.pmid
                    )));
                }
                if context_only {
                    corpus.context_only.insert(record.pmid);
                }
                corpus.records.insert(record.pmid, record);
            }
            Line::Link { source, target } => {
                let link = CommentLink::new(source, target);
                if link.is_self_loop() {
                    return Err(Error::Parse(format!("corpus line {lineno}: self-link on {source}")));
                }
                corpus.links.push(link);
            }
            Line::Unresolved { pmid } => {
                corpus.unresolved.insert(pmid);
            }
        }
    }
    if !saw_header {
        return Err(Error::Parse("corpus file has no header line".into()));
    }
    corpus.mark_dangling();
    Ok(corpus)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus(corpus, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file))
}
