//! Evidence-comment network (ECN) construction and comment-driven evidence
//! appraisal over PubMed comment linkages.

pub mod annotate;
pub mod appraise;
pub mod error;
pub mod ingest;
pub mod network;
pub mod report;
pub mod timeline;

pub use error::{Error, Result};
pub use ingest::{CommentLink, Corpus, DrugLexicon, Pmid, PubRecord};
