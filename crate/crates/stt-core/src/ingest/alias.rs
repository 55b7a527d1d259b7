//! Author identity normalization via an analyst-supplied alias map.

use std::collections::BTreeMap;

use super::records::AuthorId;
use super::IngestError;

/// Maps lowercase email or lowercase name to a canonical author label.
///
/// File format: one `key = canonical` pair per line, `#` comments, UTF-8.
#[derive(Debug, Clone, Default)]
pub struct AliasMap {
    entries: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn empty() -> Self {
        AliasMap::default()
    }

    /// Parses the alias file, rejecting conflicting canonical labels for one key.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, canonical)) = line.split_once('=') else {
                return Err(IngestError::Config(format!(
                    "alias map line {}: expected `key = canonical`, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_lowercase();
            let canonical = canonical.trim().to_string();
            if key.is_empty() || canonical.is_empty() {
                return Err(IngestError::Config(format!(
                    "alias map line {}: empty key or canonical label",
                    lineno + 1
                )));
            }
            if let Some(existing) = entries.get(&key) {
                if existing != &canonical {
                    return Err(IngestError::Config(format!(
                        "alias map key {key:?} maps to both {existing:?} and {canonical:?}"
                    )));
                }
            }
            entries.insert(key, canonical);
        }
        Ok(AliasMap { entries })
    }

    pub fn insert(&mut self, key: &str, canonical: &str) {
        self.entries
            .insert(key.to_lowercase(), canonical.to_string());
    }

    fn lookup(&self, key: &str) -> Option<&str> {
        self.entries.get(&key.to_lowercase()).map(String::as_str)
    }
}

/// Resolves one (name, email) identity to its canonical author.
///
/// Lookup order: email, then name, then fallback to lowercase email
/// (or lowercase name when the email is absent).
pub fn normalize_author(
    name: &str,
    email: &str,
    aliases: &AliasMap,
) -> Result<AuthorId, IngestError> {
    let name = name.trim();
    let email = email.trim();
    if name.is_empty() && email.is_empty() {
        return Err(IngestError::Identity);
    }
    if !email.is_empty() {
        if let Some(canonical) = aliases.lookup(email) {
            return Ok(AuthorId::new(canonical));
        }
    }
    if !name.is_empty() {
        if let Some(canonical) = aliases.lookup(name) {
            return Ok(AuthorId::new(canonical));
        }
    }
    if !email.is_empty() {
        Ok(AuthorId::new(email.to_lowercase()))
    } else {
        Ok(AuthorId::new(name.to_lowercase()))
    }
}
