//! Canonical activity records shared by every analysis stage.

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};

use super::IngestError;

/// One canonical real-world identity. Stable under alias mapping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AuthorId(pub String);

impl AuthorId {
    pub fn new(label: impl Into<String>) -> Self {
        AuthorId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AuthorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Per-file added/deleted line counts for one commit.
///
/// `binary` marks changes where line counts are not measurable; such a
/// change still counts as a file-change event but contributes zero lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub additions: u64,
    pub deletions: u64,
    pub binary: bool,
}

impl FileChange {
    pub fn lines(path: impl Into<String>, additions: u64, deletions: u64) -> Self {
        FileChange {
            path: path.into(),
            additions,
            deletions,
            binary: false,
        }
    }

    pub fn binary(path: impl Into<String>) -> Self {
        FileChange {
            path: path.into(),
            additions: 0,
            deletions: 0,
            binary: true,
        }
    }
}

/// One author's commit with its per-file change counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_id: String,
    pub author_name: String,
    pub author_email: String,
    pub canonical_author: AuthorId,
    pub timestamp: DateTime<FixedOffset>,
    pub is_merge: bool,
    pub file_changes: Vec<FileChange>,
}

/// Where a message came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSource {
    MailingList,
    Issue,
}

/// One communication event (mail or issue comment).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub message_id: String,
    pub source: MessageSource,
    pub thread_id: String,
    pub in_reply_to: Option<String>,
    pub canonical_author: AuthorId,
    pub timestamp: DateTime<FixedOffset>,
    pub body: String,
}

/// Parse-time notes: skipped lines, dangling reply ids, dropped records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub entries: Vec<String>,
}

impl Diagnostics {
    pub fn record(&mut self, note: impl Into<String>) {
        self.entries.push(note.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parser output: records in input order plus diagnostics.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub diagnostics: Diagnostics,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed {
            records: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }
}

pub fn write_jsonl<T: Serialize>(records: &[T], mut out: impl Write) -> Result<(), IngestError> {
    for record in records {
        let line = serde_json::to_string(record)?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(
    input: impl BufRead,
) -> Result<Vec<T>, IngestError> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}
