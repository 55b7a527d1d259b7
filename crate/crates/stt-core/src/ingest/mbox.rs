//! mbox mailing-list archive parser (RFC 4155 `From ` separators).

use chrono::DateTime;
use std::collections::HashMap;
use std::io::BufRead;

use super::alias::{normalize_author, AliasMap};
use super::records::{Diagnostics, MessageRecord, MessageSource, Parsed};
use super::IngestError;

pub fn parse_mbox(
    mut input: impl BufRead,
    aliases: &AliasMap,
) -> Result<Parsed<MessageRecord>, IngestError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Ok(Parsed::default());
    }
    let text = decode_text(&bytes);
    if !text.starts_with("From ") {
        return Err(IngestError::Format(
            "mbox input does not start with a `From ` separator line".into(),
        ));
    }

    let mut diagnostics = Diagnostics::default();
    let mut records = Vec::new();
    let mut threads = Threader::default();

    for (index, raw) in split_messages(&text).into_iter().enumerate() {
        match parse_message(raw, index, aliases, &mut threads, &mut diagnostics) {
            Ok(record) => records.push(record),
            Err(reason) => diagnostics.record(format!("message {}: {reason}", index + 1)),
        }
    }
    Ok(Parsed {
        records,
        diagnostics,
    })
}

fn decode_text(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        // Latin-1 fallback: every byte maps to the same code point.
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    }
}

fn split_messages(text: &str) -> Vec<&str> {
    let mut starts = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.starts_with("From ") {
            starts.push(offset);
        }
        offset += line.len();
    }
    let mut messages = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(text.len());
        messages.push(&text[start..end]);
    }
    messages
}

/// Assigns thread ids from References/In-Reply-To chains, falling back to
/// normalized Subject, then to the message's own id.
#[derive(Default)]
struct Threader {
    by_message_id: HashMap<String, String>,
    by_subject: HashMap<String, String>,
}

impl Threader {
    fn assign(
        &mut self,
        message_id: &str,
        references: &[String],
        subject: &str,
        diagnostics: &mut Diagnostics,
    ) -> (String, Option<String>) {
        let in_reply_to = references.last().cloned();
        let mut thread_id = None;
        for reference in references.iter().rev() {
            if let Some(t) = self.by_message_id.get(reference) {
                thread_id = Some(t.clone());
                break;
            }
        }
        if thread_id.is_none() {
            if let Some(parent) = &in_reply_to {
                diagnostics.record(format!(
                    "message {message_id}: dangling reference {parent} (thread started elsewhere)"
                ));
            }
        }
        let subject_key = normalize_subject(subject);
        let thread_id = thread_id
            .or_else(|| {
                if subject_key.is_empty() {
                    None
                } else {
                    self.by_subject.get(&subject_key).cloned()
                }
            })
            .unwrap_or_else(|| message_id.to_string());
        self.by_message_id
            .insert(message_id.to_string(), thread_id.clone());
        if !subject_key.is_empty() {
            self.by_subject.entry(subject_key).or_insert(thread_id.clone());
        }
        (thread_id, in_reply_to)
    }
}

fn normalize_subject(subject: &str) -> String {
    let mut s = subject.trim();
    loop {
        let lower = s.to_lowercase();
        let stripped = ["re:", "fwd:", "fw:", "aw:"]
            .iter()
            .find_map(|p| lower.starts_with(p).then(|| s[p.len()..].trim_start()));
        match stripped {
            Some(rest) => s = rest,
            None => break,
        }
    }
    s.to_lowercase()
}

fn parse_message(
    raw: &str,
    index: usize,
    aliases: &AliasMap,
    threads: &mut Threader,
    diagnostics: &mut Diagnostics,
) -> Result<MessageRecord, String> {
    let after_separator = raw.split_once('\n').map(|(_, rest)| rest).unwrap_or("");
    let (headers, body_raw) = split_header_body(after_separator);
    let headers = fold_headers(headers);

    let message_id = header_value(&headers, "message-id")
        .map(|v| strip_angle(v).to_string())
        .unwrap_or_else(|| format!("generated-{}", index + 1));

    let (name, email) = parse_from_header(header_value(&headers, "from").unwrap_or(""));
    let canonical_author =
        normalize_author(&name, &email, aliases).map_err(|e| format!("author: {e}"))?;

    let date = header_value(&headers, "date").ok_or("missing Date header")?;
    let timestamp = DateTime::parse_from_rfc2822(date.trim())
        .map_err(|e| format!("bad Date {date:?}: {e}"))?;

    let mut references: Vec<String> = Vec::new();
    if let Some(refs) = header_value(&headers, "references") {
        references.extend(refs.split_whitespace().map(|r| strip_angle(r).to_string()));
    }
    if let Some(parent) = header_value(&headers, "in-reply-to") {
        let parent = strip_angle(parent.split_whitespace().next().unwrap_or("")).to_string();
        if !parent.is_empty() && references.last() != Some(&parent) {
            references.push(parent);
        }
    }
    let subject = header_value(&headers, "subject").unwrap_or("");
    let (thread_id, in_reply_to) = threads.assign(&message_id, &references, subject, diagnostics);

    let encoding = header_value(&headers, "content-transfer-encoding")
        .unwrap_or("7bit")
        .trim()
        .to_lowercase();
    let body = decode_body(body_raw, &encoding)
        .ok_or_else(|| format!("undecodable body (encoding {encoding:?})"))?;

    Ok(MessageRecord {
        message_id,
        source: MessageSource::MailingList,
        thread_id,
        in_reply_to,
        canonical_author,
        timestamp,
        body: strip_quoted_lines(&body),
    })
}

fn split_header_body(text: &str) -> (&str, &str) {
    if let Some(pos) = text.find("\n\n") {
        (&text[..pos], &text[pos + 2..])
    } else if let Some(pos) = text.find("\r\n\r\n") {
        (&text[..pos], &text[pos + 4..])
    } else {
        (text, "")
    }
}

/// Unfolds header continuation lines into `(lowercase name, value)` pairs.
fn fold_headers(headers: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for line in headers.lines() {
        let line = line.trim_end_matches('\r');
        if line.starts_with(' ') || line.starts_with('\t') {
            if let Some((_, value)) = out.last_mut() {
                value.push(' ');
                value.push_str(line.trim_start());
            }
        } else if let Some((name, value)) = line.split_once(':') {
            out.push((name.trim().to_lowercase(), value.trim().to_string()));
        }
    }
    out
}

fn header_value<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| v.as_str())
}

fn strip_angle(value: &str) -> &str {
    value.trim().trim_start_matches('<').trim_end_matches('>')
}

fn parse_from_header(value: &str) -> (String, String) {
    let value = value.trim();
    if let (Some(start), Some(end)) = (value.find('<'), value.rfind('>')) {
        if start < end {
            let email = value[start + 1..end].trim().to_string();
            let name = value[..start].trim().trim_matches('"').to_string();
            return (name, email);
        }
    }
    if value.contains('@') {
        (String::new(), value.to_string())
    } else {
        (value.trim_matches('"').to_string(), String::new())
    }
}

fn decode_body(body: &str, encoding: &str) -> Option<String> {
    match encoding {
        "" | "7bit" | "8bit" | "binary" => Some(body.to_string()),
        "quoted-printable" => Some(decode_quoted_printable(body)),
        _ => None, // base64 and friends are out of scope; caller skips
    }
}

fn decode_quoted_printable(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '=' {
            out.push(c);
            continue;
        }
        let hi = chars.next();
        match hi {
            Some('\n') => {} // soft break
            Some('\r') => {
                chars.next_if_eq(&'\n');
            }
            Some(h) => {
                let lo = chars.next();
                match (h.to_digit(16), lo.and_then(|l| l.to_digit(16))) {
                    (Some(h), Some(l)) => out.push(((h * 16 + l) as u8) as char),
                    _ => {
                        out.push('=');
                        out.push(h);
                        if let Some(l) = lo {
                            out.push(l);
                        }
                    }
                }
            }
            None => out.push('='),
        }
    }
    out
}

/// Drops quoted reply lines (leading `>`), which also removes `>From ` escapes.
fn strip_quoted_lines(body: &str) -> String {
    body.lines()
        .filter(|line| !line.trim_start().starts_with('>'))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mbox_fixture() -> String {
        concat!(
            "From lasse Mon Jan  2 10:00:00 2023\n",
            "From: Lasse Collin <lasse@example.org>\n",
            "Message-ID: <m1@list>\n",
            "Date: Mon, 2 Jan 2023 10:00:00 +0200\n",
            "Subject: XZ release planning\n",
            "\n",
            "Planning the next release.\n",
            "\n",
            "From jia Mon Jan  2 11:00:00 2023\n",
            "From: Jia Tan <jia@example.com>\n",
            "Message-ID: <m2@list>\n",
            "In-Reply-To: <m1@list>\n",
            "Date: Mon, 2 Jan 2023 11:00:00 +0800\n",
            "Subject: Re: XZ release planning\n",
            "\n",
            "> Planning the next release.\n",
            "I can help with that.\n",
            "\n",
            "From puppet Mon Jan  2 12:00:00 2023\n",
            "From: puppet@example.net\n",
            "Message-ID: <m3@list>\n",
            "Date: Mon, 2 Jan 2023 12:00:00 +0000\n",
            "Subject: Unrelated question\n",
            "\n",
            "Why is progress so slow?\n",
        )
        .to_string()
    }

    #[test]
    fn empty_file_yields_empty_list() {
        let parsed = parse_mbox("".as_bytes(), &AliasMap::empty()).unwrap();
        assert!(parsed.records.is_empty());
    }

    #[test]
    fn reply_chain_shares_thread_id() {
        let parsed = parse_mbox(mbox_fixture().as_bytes(), &AliasMap::empty()).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.records[0].thread_id, parsed.records[1].thread_id);
        assert_ne!(parsed.records[0].thread_id, parsed.records[2].thread_id);
        assert_eq!(parsed.records[1].in_reply_to.as_deref(), Some("m1@list"));
    }

    #[test]
    fn quoted_lines_stripped_from_body() {
        let parsed = parse_mbox(mbox_fixture().as_bytes(), &AliasMap::empty()).unwrap();
        assert_eq!(parsed.records[1].body, "I can help with that.");
    }

    #[test]
    fn folded_subject_reassembled_for_threading() {
        let mbox = concat!(
            "From a Mon Jan  2 10:00:00 2023\n",
            "From: a@x.com\n",
            "Message-ID: <f1@list>\n",
            "Date: Mon, 2 Jan 2023 10:00:00 +0000\n",
            "Subject: a very long subject\n",
            " split over two lines\n",
            "\n",
            "first\n",
            "\n",
            "From b Mon Jan  2 11:00:00 2023\n",
            "From: b@x.com\n",
            "Message-ID: <f2@list>\n",
            "Date: Mon, 2 Jan 2023 11:00:00 +0000\n",
            "Subject: Re: a very long subject split over two lines\n",
            "\n",
            "second\n",
        );
        let parsed = parse_mbox(mbox.as_bytes(), &AliasMap::empty()).unwrap();
        assert_eq!(parsed.records[0].thread_id, parsed.records[1].thread_id);
    }

    #[test]
    fn non_mbox_input_is_a_format_error() {
        let err = parse_mbox("Subject: nope\n".as_bytes(), &AliasMap::empty()).unwrap_err();
        assert!(matches!(err, IngestError::Format(_)));
    }

    #[test]
    fn unsupported_encoding_skips_message_with_diagnostic() {
        let mbox = concat!(
            "From a Mon Jan  2 10:00:00 2023\n",
            "From: a@x.com\n",
            "Message-ID: <b64@list>\n",
            "Date: Mon, 2 Jan 2023 10:00:00 +0000\n",
            "Content-Transfer-Encoding: base64\n",
            "Subject: blob\n",
            "\n",
            "aGVsbG8=\n",
        );
        let parsed = parse_mbox(mbox.as_bytes(), &AliasMap::empty()).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.diagnostics.len(), 1);
    }

    #[test]
    fn timestamps_keep_author_offset() {
        let parsed = parse_mbox(mbox_fixture().as_bytes(), &AliasMap::empty()).unwrap();
        assert_eq!(parsed.records[1].timestamp.offset().local_minus_utc(), 8 * 3600);
    }

    #[test]
    fn quoted_printable_body_decoded() {
        let mbox = concat!(
            "From a Mon Jan  2 10:00:00 2023\n",
            "From: a@x.com\n",
            "Message-ID: <qp@list>\n",
            "Date: Mon, 2 Jan 2023 10:00:00 +0000\n",
            "Content-Transfer-Encoding: quoted-printable\n",
            "Subject: qp\n",
            "\n",
            "caf=C3=A9 line=\n",
            " continued\n",
        );
        let parsed = parse_mbox(mbox.as_bytes(), &AliasMap::empty()).unwrap();
        assert!(parsed.records[0].body.contains("line continued"));
    }
}
