//! Analyzer plugin boundary for the Execute stage. Analyzers register by
//! name; the built-in rule-check analyzer re-verifies the class rules at
//! file granularity. Real static/dynamic analysis plugs in behind this
//! trait.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::engine::WorkOrder;
use super::rules::{compile_rules, default_rule_specs, VulnClassRule};
use crate::topology::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub plugin: String,
    pub text: String,
    pub severity: Severity,
}

/// One vulnerability-testing strategy run against a work order.
pub trait Analyzer: Send + Sync {
    fn name(&self) -> &'static str;
    /// Findings for the order, or a declared failure message.
    fn analyze(&self, order: &WorkOrder, snapshot: &Snapshot) -> Result<Vec<Finding>, String>;
}

/// Name-keyed analyzer registry; selection happens at runtime via config.
#[derive(Default)]
pub struct AnalyzerRegistry {
    analyzers: BTreeMap<&'static str, Box<dyn Analyzer>>,
}

impl AnalyzerRegistry {
    pub fn empty() -> Self {
        AnalyzerRegistry::default()
    }

    /// Registry preloaded with the built-in analyzers.
    pub fn builtin() -> Self {
        let mut registry = AnalyzerRegistry::default();
        registry.register(Box::new(RuleCheckAnalyzer::default()));
        registry
    }

    pub fn register(&mut self, analyzer: Box<dyn Analyzer>) {
        self.analyzers.insert(analyzer.name(), analyzer);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Analyzer> {
        self.analyzers.get(name).map(Box::as_ref)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.analyzers.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Analyzer> {
        self.analyzers.values().map(Box::as_ref)
    }

    pub fn is_empty(&self) -> bool {
        self.analyzers.is_empty()
    }
}

/// Built-in analyzer: re-applies the vulnerability-class rule table to the
/// ordered file and reports every rule that still holds.
pub struct RuleCheckAnalyzer {
    rules: Vec<VulnClassRule>,
}

impl Default for RuleCheckAnalyzer {
    fn default() -> Self {
        RuleCheckAnalyzer {
            rules: compile_rules(&default_rule_specs()).expect("default rules compile"),
        }
    }
}

impl RuleCheckAnalyzer {
    pub fn with_rules(rules: Vec<VulnClassRule>) -> Self {
        RuleCheckAnalyzer { rules }
    }
}

impl Analyzer for RuleCheckAnalyzer {
    fn name(&self) -> &'static str {
        "rule-check"
    }

    fn analyze(&self, order: &WorkOrder, snapshot: &Snapshot) -> Result<Vec<Finding>, String> {
        let mut findings = Vec::new();
        for rule in &self.rules {
            if rule.matches(&order.file, snapshot) {
                findings.push(Finding {
                    plugin: self.name().to_string(),
                    text: format!(
                        "rule {} confirms class {:?} for {}",
                        rule.name, rule.class, order.file
                    ),
                    severity: Severity::High,
                });
            }
        }
        Ok(findings)
    }
}

/// Test helper: an analyzer that always declares failure.
pub struct FailingAnalyzer;

impl Analyzer for FailingAnalyzer {
    fn name(&self) -> &'static str {
        "always-fails"
    }

    fn analyze(&self, _order: &WorkOrder, _snapshot: &Snapshot) -> Result<Vec<Finding>, String> {
        Err("declared failure".to_string())
    }
}
