//! Parser for git numstat history exports.
//!
//! Expected input is the output of
//! `git log --numstat --date=iso-strict --pretty=format:'%H|%an|%ae|%ad|%P'`:
//! one pipe-separated commit header per commit, followed by tab-separated
//! `<adds>\t<dels>\t<path>` lines (`-` in a numeric column marks binary).

use chrono::DateTime;
use std::io::BufRead;

use super::alias::{normalize_author, AliasMap};
use super::records::{CommitRecord, Diagnostics, FileChange, Parsed};
use super::IngestError;

pub fn parse_numstat_log(
    input: impl BufRead,
    aliases: &AliasMap,
) -> Result<Parsed<CommitRecord>, IngestError> {
    let mut records: Vec<CommitRecord> = Vec::new();
    let mut diagnostics = Diagnostics::default();
    let mut saw_content = false;

    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        saw_content = true;
        if let Some(header) = parse_header(&line) {
            match build_commit(header, aliases) {
                Ok(commit) => records.push(commit),
                Err(reason) => {
                    diagnostics.record(format!("line {}: {reason}", lineno + 1));
                }
            }
            continue;
        }
        match parse_change_line(&line) {
            Some(change) => match records.last_mut() {
                Some(commit) => commit.file_changes.push(change),
                None => diagnostics
                    .record(format!("line {}: change line before any commit header", lineno + 1)),
            },
            None => diagnostics.record(format!("line {}: malformed line skipped", lineno + 1)),
        }
    }

    if saw_content && records.is_empty() && !diagnostics.is_empty() {
        return Err(IngestError::Format(
            "no commit headers found in non-empty input".into(),
        ));
    }
    Ok(Parsed {
        records,
        diagnostics,
    })
}

struct Header<'a> {
    commit_id: &'a str,
    author_name: &'a str,
    author_email: &'a str,
    date: &'a str,
    parents: &'a str,
}

fn parse_header(line: &str) -> Option<Header<'_>> {
    // %P may be empty (root commit), so allow a trailing empty field.
    let fields: Vec<&str> = line.splitn(5, '|').collect();
    if fields.len() < 4 {
        return None;
    }
    let commit_id = fields[0].trim();
    if commit_id.len() < 7 || !commit_id.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    Some(Header {
        commit_id,
        author_name: fields[1].trim(),
        author_email: fields[2].trim(),
        date: fields[3].trim(),
        parents: fields.get(4).map(|p| p.trim()).unwrap_or(""),
    })
}

fn build_commit(header: Header<'_>, aliases: &AliasMap) -> Result<CommitRecord, String> {
    let timestamp = DateTime::parse_from_rfc3339(header.date)
        .map_err(|e| format!("bad date {:?}: {e}", header.date))?;
    let canonical_author = normalize_author(header.author_name, header.author_email, aliases)
        .map_err(|e| format!("commit {}: {e}", header.commit_id))?;
    let is_merge = header.parents.split_whitespace().count() >= 2;
    Ok(CommitRecord {
        commit_id: header.commit_id.to_string(),
        author_name: header.author_name.to_string(),
        author_email: header.author_email.to_string(),
        canonical_author,
        timestamp,
        is_merge,
        file_changes: Vec::new(),
    })
}

fn parse_change_line(line: &str) -> Option<FileChange> {
    let mut parts = line.splitn(3, '\t');
    let adds = parts.next()?.trim();
    let dels = parts.next()?.trim();
    let path = parts.next()?.trim();
    if path.is_empty() {
        return None;
    }
    match (adds, dels) {
        ("-", "-") => Some(FileChange::binary(path)),
        ("-", _) | (_, "-") => None, // binary marker must be on both or neither
        _ => {
            let additions = adds.parse().ok()?;
            let deletions = dels.parse().ok()?;
            Some(FileChange::lines(path, additions, deletions))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "0b99783d63f27606936bb79accdbed23f8e95981|Jia Tan|jiat0218@gmail.com|2024-02-23T17:53:09+08:00|aaaa000011112222333344445555666677778888";

    #[test]
    fn empty_input_yields_empty_list() {
        let parsed = parse_numstat_log("".as_bytes(), &AliasMap::empty()).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.diagnostics.len(), 0);
    }

    #[test]
    fn single_commit_single_change() {
        let input = format!("{HEADER}\n10\t2\tsrc/a.c\n");
        let parsed = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        let commit = &parsed.records[0];
        assert_eq!(commit.file_changes, vec![FileChange::lines("src/a.c", 10, 2)]);
        assert!(!commit.is_merge);
        assert_eq!(commit.canonical_author.as_str(), "jiat0218@gmail.com");
    }

    #[test]
    fn binary_markers_on_both_columns() {
        let input = format!("{HEADER}\n-\t-\ttests/blob.bin\n");
        let parsed = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        let change = &parsed.records[0].file_changes[0];
        assert!(change.binary);
        assert_eq!((change.additions, change.deletions), (0, 0));
    }

    #[test]
    fn lone_binary_marker_is_malformed() {
        let input = format!("{HEADER}\n-\t3\tweird.txt\n");
        let parsed = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        assert!(parsed.records[0].file_changes.is_empty());
        assert_eq!(parsed.diagnostics.len(), 1);
    }

    #[test]
    fn merge_commits_flagged() {
        let input = "ff00ff00ff00|A|a@x.com|2023-01-01T00:00:00+00:00|p1 p2\n";
        let parsed = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        assert!(parsed.records[0].is_merge);
    }

    #[test]
    fn headerless_nonempty_input_is_a_format_error() {
        let err = parse_numstat_log("garbage line\n".as_bytes(), &AliasMap::empty()).unwrap_err();
        assert!(matches!(err, IngestError::Format(_)));
    }

    #[test]
    fn malformed_lines_are_counted_not_fatal() {
        let input = format!("{HEADER}\n10\t2\tsrc/a.c\nnot a numstat line at all?!\n3\t1\tsrc/b.c\n");
        let parsed = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        assert_eq!(parsed.records[0].file_changes.len(), 2);
        assert_eq!(parsed.diagnostics.len(), 1);
    }

    #[test]
    fn change_count_matches_wellformed_lines() {
        let input = format!(
            "{HEADER}\n1\t1\ta\n2\t2\tb\n{}\n3\t3\tc\n",
            HEADER.replace('0', "1")
        );
        let parsed = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        let total: usize = parsed.records.iter().map(|c| c.file_changes.len()).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn parsing_is_deterministic() {
        let input = format!("{HEADER}\n10\t2\tsrc/a.c\n-\t-\tblob.bin\n");
        let a = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        let b = parse_numstat_log(input.as_bytes(), &AliasMap::empty()).unwrap();
        assert_eq!(a.records, b.records);
    }
}
