//! Ingestion of local repository and communication exports into canonical
//! records, with author-identity normalization.

pub mod alias;
pub mod issues;
pub mod mbox;
pub mod numstat;
pub mod records;

pub use alias::{normalize_author, AliasMap};
pub use issues::parse_issues_json;
pub use mbox::parse_mbox;
pub use numstat::parse_numstat_log;
pub use records::{
    read_jsonl, write_jsonl, AuthorId, CommitRecord, Diagnostics, FileChange, MessageRecord,
    MessageSource, Parsed,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("identity error: both name and email are empty")]
    Identity,
    #[error("config error: {0}")]
    Config(String),
}
