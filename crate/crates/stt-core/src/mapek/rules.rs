//! Declarative vulnerability-class rules applied to candidate files.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::MapekError;
use crate::topology::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VulnerabilityClass {
    DesignFlaw,
    ImplementationBug,
    ConfigurationError,
    OperationMaintenance,
}

/// One rule: a predicate over a candidate file and its snapshot context.
/// All configured conditions must hold for the rule to tag its class.
#[derive(Debug, Clone)]
pub struct VulnClassRule {
    pub name: String,
    pub class: VulnerabilityClass,
    /// Regex the candidate path must match.
    pub file_pattern: Option<Regex>,
    /// The candidate must have seen a binary change in the window.
    pub requires_binary: bool,
    /// Some author maintaining the candidate must also maintain a file
    /// matching this pattern in the same window.
    pub co_maintained_pattern: Option<Regex>,
}

impl VulnClassRule {
    pub fn matches(&self, file: &str, snapshot: &Snapshot) -> bool {
        if let Some(pattern) = &self.file_pattern {
            if !pattern.is_match(file) {
                return false;
            }
        }
        if self.requires_binary && !snapshot.binary_files.contains(file) {
            return false;
        }
        if let Some(pattern) = &self.co_maintained_pattern {
            let maintainers: BTreeSet<_> = snapshot
                .maintainership
                .iter()
                .filter(|(_, f)| f == file)
                .map(|(a, _)| a)
                .collect();
            let hit = snapshot.maintainership.iter().any(|(author, other)| {
                other != file && maintainers.contains(author) && pattern.is_match(other)
            });
            if !hit {
                return false;
            }
        }
        true
    }
}

/// Serialized rule form used in the loop config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSpec {
    pub name: String,
    pub class: VulnerabilityClass,
    #[serde(default)]
    pub file_pattern: Option<String>,
    #[serde(default)]
    pub requires_binary: bool,
    #[serde(default)]
    pub co_maintained_pattern: Option<String>,
}

impl RuleSpec {
    pub fn compile(&self) -> Result<VulnClassRule, MapekError> {
        let compile = |p: &Option<String>| -> Result<Option<Regex>, MapekError> {
            p.as_deref()
                .map(|s| {
                    Regex::new(s)
                        .map_err(|e| MapekError::Config(format!("rule {}: {e}", self.name)))
                })
                .transpose()
        };
        Ok(VulnClassRule {
            name: self.name.clone(),
            class: self.class,
            file_pattern: compile(&self.file_pattern)?,
            requires_binary: self.requires_binary,
            co_maintained_pattern: compile(&self.co_maintained_pattern)?,
        })
    }
}

/// The four built-in rules, one per vulnerability class.
pub fn default_rule_specs() -> Vec<RuleSpec> {
    vec![
        RuleSpec {
            name: "binary-blob-with-build-script".into(),
            class: VulnerabilityClass::ImplementationBug,
            file_pattern: None,
            requires_binary: true,
            co_maintained_pattern: Some(
                r"(?i)(^|/)(makefile|configure|cmakelists\.txt|build[^/]*)$|\.(am|ac|m4|mk|sh)$"
                    .into(),
            ),
        },
        RuleSpec {
            name: "config-file-influence-spike".into(),
            class: VulnerabilityClass::ConfigurationError,
            file_pattern: Some(r"(?i)(^|/)[^/]*(config|settings)[^/]*|\.(conf|cfg|ini|toml|ya?ml)$".into()),
            requires_binary: false,
            co_maintained_pattern: None,
        },
        RuleSpec {
            name: "interface-churn".into(),
            class: VulnerabilityClass::DesignFlaw,
            file_pattern: Some(r"(?i)\.(h|hpp|hh)$|(^|/)api/".into()),
            requires_binary: false,
            co_maintained_pattern: None,
        },
        RuleSpec {
            name: "pipeline-definition-change".into(),
            class: VulnerabilityClass::OperationMaintenance,
            file_pattern: Some(r"(?i)(^|/)\.?(github|gitlab|ci|workflows?)/|\.(yml|yaml)$|(^|/)dockerfile$".into()),
            requires_binary: false,
            co_maintained_pattern: None,
        },
    ]
}

pub fn compile_rules(specs: &[RuleSpec]) -> Result<Vec<VulnClassRule>, MapekError> {
    specs.iter().map(RuleSpec::compile).collect()
}
