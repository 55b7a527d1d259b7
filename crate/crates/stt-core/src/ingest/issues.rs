//! Parser for issue-tracker exports: a JSON array of issues with comments.

use chrono::DateTime;
use serde_json::Value;
use std::io::BufRead;

use super::alias::{normalize_author, AliasMap};
use super::records::{Diagnostics, MessageRecord, MessageSource, Parsed};
use super::IngestError;

/// Parses an issues export into one MessageRecord per issue body and comment.
///
/// Schema: `[{number, title, user{login, email?}, created_at, body,
/// comments: [{user, created_at, body}]}]`. thread_id is the issue number.
pub fn parse_issues_json(
    input: impl BufRead,
    aliases: &AliasMap,
) -> Result<Parsed<MessageRecord>, IngestError> {
    let root: Value = serde_json::from_reader(input)
        .map_err(|e| IngestError::Format(format!("issues export is not valid JSON: {e}")))?;
    let issues = root
        .as_array()
        .ok_or_else(|| IngestError::Format("issues export must be a JSON array".into()))?;

    let mut records = Vec::new();
    let mut diagnostics = Diagnostics::default();

    for (index, issue) in issues.iter().enumerate() {
        let number = match issue.get("number").and_then(Value::as_i64) {
            Some(n) => n,
            None => {
                diagnostics.record(format!("issue at index {index}: missing number, skipped"));
                continue;
            }
        };
        let thread_id = format!("issue-{number}");
        match build_record(issue, &format!("{thread_id}#0"), &thread_id, None, aliases) {
            Ok(record) => records.push(record),
            Err(reason) => diagnostics.record(format!("issue {number}: {reason}")),
        }
        let comments = issue
            .get("comments")
            .and_then(Value::as_array)
            .cloned()
            .unwrap_or_default();
        for (ci, comment) in comments.iter().enumerate() {
            let message_id = format!("{thread_id}#{}", ci + 1);
            match build_record(
                comment,
                &message_id,
                &thread_id,
                Some(format!("{thread_id}#0")),
                aliases,
            ) {
                Ok(record) => records.push(record),
                Err(reason) => {
                    diagnostics.record(format!("issue {number} comment {}: {reason}", ci + 1))
                }
            }
        }
    }
    Ok(Parsed {
        records,
        diagnostics,
    })
}

fn build_record(
    node: &Value,
    message_id: &str,
    thread_id: &str,
    in_reply_to: Option<String>,
    aliases: &AliasMap,
) -> Result<MessageRecord, String> {
    let user = node.get("user").ok_or("missing user")?;
    let login = user
        .get("login")
        .and_then(Value::as_str)
        .ok_or("missing user.login")?;
    let email = user.get("email").and_then(Value::as_str).unwrap_or("");
    let canonical_author =
        normalize_author(login, email, aliases).map_err(|e| format!("author: {e}"))?;
    let created_at = node
        .get("created_at")
        .and_then(Value::as_str)
        .ok_or("missing created_at")?;
    let timestamp = DateTime::parse_from_rfc3339(created_at)
        .map_err(|e| format!("bad created_at {created_at:?}: {e}"))?;
    let body = node.get("body").and_then(Value::as_str).unwrap_or("");
    Ok(MessageRecord {
        message_id: message_id.to_string(),
        source: MessageSource::Issue,
        thread_id: thread_id.to_string(),
        in_reply_to,
        canonical_author,
        timestamp,
        body: body.to_string(),
    })
}
