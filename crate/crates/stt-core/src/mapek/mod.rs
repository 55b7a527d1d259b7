//! The MAPE-K detection loop: baselines, vulnerability-class rules,
//! analyzer plugins, and the knowledge-store driven engine.

pub mod baseline;
pub mod engine;
pub mod plugin;
pub mod rules;

pub use baseline::{Baseline, MIN_OBSERVATIONS};
pub use engine::{
    analyze_candidates, execute_plan, plan_reachability, run_detection, AnalyzerFinding,
    AnomalyFlag, CoMovement, KnowledgeStore, LoopConfig, MonitorOutcome, TaggedCandidates,
    ThreatReport, WorkOrder,
};
pub use plugin::{Analyzer, AnalyzerRegistry, Finding, RuleCheckAnalyzer, Severity};
pub use rules::{
    compile_rules, default_rule_specs, RuleSpec, VulnClassRule, VulnerabilityClass,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapekError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sequencing error: {0}")]
    Sequencing(String),
}
