//! The Monitor -> Analyze -> Plan -> Execute loop over a snapshot series,
//! with a knowledge store of baselines and derived thresholds.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::baseline::{Baseline, MIN_OBSERVATIONS};
use super::plugin::{AnalyzerRegistry, Finding, Severity};
use super::rules::{compile_rules, default_rule_specs, RuleSpec, VulnClassRule, VulnerabilityClass};
use super::MapekError;
use crate::indicators::correlate_series;
use crate::ingest::AuthorId;
use crate::topology::{
    filter_influence_changes, filter_relation_changes, reachability, select_components,
    snapshot_delta, Aggregation, CandidateSet, Evidence, ReachabilityTrace, Snapshot,
    ThresholdConfig, TopologyDelta, Window,
};

/// Loop configuration, loadable from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub k_sigma: f64,
    pub window_days: i64,
    pub step_days: i64,
    pub max_depth: usize,
    pub feasibility_floor: f64,
    pub relation_aggregation: Aggregation,
    pub influence_aggregation: Aggregation,
    pub weight_change_epsilon: f64,
    /// Trailing windows used for the co-movement correlation test.
    pub co_movement_windows: usize,
    pub co_movement_r: f64,
    pub rules: Vec<RuleSpec>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            k_sigma: 3.0,
            window_days: 30,
            step_days: 30,
            max_depth: 3,
            feasibility_floor: 1.0,
            relation_aggregation: Aggregation::Any,
            influence_aggregation: Aggregation::Any,
            weight_change_epsilon: 0.0,
            co_movement_windows: 6,
            co_movement_r: 0.8,
            rules: default_rule_specs(),
        }
    }
}

impl LoopConfig {
    pub fn from_toml(text: &str) -> Result<Self, MapekError> {
        let mut config: LoopConfig =
            toml::from_str(text).map_err(|e| MapekError::Config(e.to_string()))?;
        if config.rules.is_empty() {
            config.rules = default_rule_specs();
        }
        Ok(config)
    }
}

/// One baseline breach raised by the monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyFlag {
    pub metric: String,
    pub author: AuthorId,
    pub observed: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
}

/// Two per-author metric series moving together over trailing windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoMovement {
    pub author: AuthorId,
    pub metric_a: String,
    pub metric_b: String,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorOutcome {
    pub delta: TopologyDelta,
    pub flags: Vec<AnomalyFlag>,
    pub co_movements: Vec<CoMovement>,
}

const AUTHOR_METRICS: [&str; 3] = ["avg_total", "centrality", "neg_sentiment"];

fn fnv64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// The K in MAPE-K: sealed snapshots, baselines, and per-author metric
/// history. Single writer; snapshots are never mutated after append.
#[derive(Debug, Default)]
pub struct KnowledgeStore {
    snapshots: Vec<Snapshot>,
    snapshot_hashes: Vec<u64>,
    baselines: BTreeMap<String, Baseline>,
    /// Per (author, metric), the trailing observed values.
    history: BTreeMap<(AuthorId, String), Vec<f64>>,
}

impl KnowledgeStore {
    pub fn new() -> Self {
        KnowledgeStore::default()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn snapshot_hashes(&self) -> &[u64] {
        &self.snapshot_hashes
    }

    pub fn baseline(&self, metric: &str) -> Option<&Baseline> {
        self.baselines.get(metric)
    }

    fn observe(
        &mut self,
        metric: &str,
        k_sigma: f64,
        value: f64,
    ) -> Result<bool, MapekError> {
        self.baselines
            .entry(metric.to_string())
            .or_insert_with(|| Baseline::new(metric, k_sigma))
            .observe(value)
    }

    /// Candidate thresholds derived from the nominal baselines:
    /// mean + k_sigma * floored std, or infinity while still warming up.
    pub fn derive_thresholds(&self, config: &LoopConfig) -> ThresholdConfig {
        let limit = |metric: &str| -> f64 {
            match self.baselines.get(metric) {
                Some(b) if b.count >= MIN_OBSERVATIONS => b.threshold(),
                _ => f64::INFINITY,
            }
        };
        let int_limit = |metric: &str| -> i64 {
            let t = limit(metric);
            if t.is_finite() {
                t.ceil() as i64
            } else {
                i64::MAX
            }
        };
        ThresholdConfig {
            relation_thresholds: vec![limit("relation/message_count"), f64::INFINITY],
            influence_thresholds: vec![
                int_limit("influence/additions"),
                int_limit("influence/deletions"),
                int_limit("influence/file_changes"),
            ],
            relation_aggregation: config.relation_aggregation,
            influence_aggregation: config.influence_aggregation,
            weight_change_epsilon: config.weight_change_epsilon,
        }
    }

    /// Per-author window metrics derived from a snapshot's M and I.
    fn author_metrics(snapshot: &Snapshot) -> BTreeMap<AuthorId, [f64; 3]> {
        let total_files = snapshot
            .maintainership
            .iter()
            .map(|(_, f)| f)
            .collect::<BTreeSet<_>>()
            .len() as f64;
        let mut out: BTreeMap<AuthorId, [f64; 3]> = BTreeMap::new();
        let mut lines: BTreeMap<&AuthorId, (f64, f64)> = BTreeMap::new();
        for ((author, _), counts) in &snapshot.influence {
            let entry = lines.entry(author).or_default();
            entry.0 += (counts[0] + counts[1]) as f64;
            entry.1 += counts[2] as f64;
        }
        for (author, (total_lines, changes)) in &lines {
            let avg_total = if *changes > 0.0 { total_lines / changes } else { 0.0 };
            let touched = snapshot
                .maintainership
                .iter()
                .filter(|(a, _)| a == *author)
                .count() as f64;
            let centrality = if total_files > 0.0 { touched / total_files } else { 0.0 };
            out.insert((*author).clone(), [avg_total, centrality, 0.0]);
        }
        // mean sentiment per author over their relations, negated so that
        // rising hostility is a rising series
        let mut sentiments: BTreeMap<&AuthorId, Vec<f64>> = BTreeMap::new();
        for (pair, weights) in &snapshot.relation_weights {
            for author in pair.members() {
                sentiments.entry(author).or_default().push(weights[1]);
            }
        }
        for (author, values) in sentiments {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            out.entry(author.clone()).or_insert([0.0, 0.0, 0.0])[2] = -mean;
        }
        out
    }

    /// Monitor stage: append the snapshot, compute the delta against the
    /// previous one, update baselines, and raise anomaly and co-movement
    /// flags.
    pub fn monitor_step(
        &mut self,
        snapshot: Snapshot,
        config: &LoopConfig,
    ) -> Result<MonitorOutcome, MapekError> {
        if let Some(last) = self.snapshots.last() {
            if snapshot.window.start < last.window.start
                || (snapshot.window.start == last.window.start
                    && snapshot.window.end <= last.window.end)
            {
                return Err(MapekError::Sequencing(format!(
                    "snapshot window starting {} does not follow {}",
                    snapshot.window.start, last.window.start
                )));
            }
        }

        let previous = self.snapshots.last().cloned().unwrap_or_else(|| Snapshot {
            window: snapshot.window,
            files: BTreeSet::new(),
            dependencies: snapshot.dependencies.clone(),
            authors: BTreeSet::new(),
            relations: BTreeSet::new(),
            relation_params: snapshot.relation_params.clone(),
            relation_weights: BTreeMap::new(),
            maintainership: BTreeSet::new(),
            activities: snapshot.activities.clone(),
            influence: BTreeMap::new(),
            binary_files: BTreeSet::new(),
        });
        let delta = snapshot_delta(&previous, &snapshot, config.weight_change_epsilon)
            .map_err(|e| MapekError::Config(e.to_string()))?;

        let mut flags = Vec::new();
        let metrics = Self::author_metrics(&snapshot);
        for (author, values) in &metrics {
            for (i, metric) in AUTHOR_METRICS.iter().enumerate() {
                let key = format!("{metric}/{author}");
                let anomalous = self.observe(&key, config.k_sigma, values[i])?;
                if anomalous {
                    let baseline = &self.baselines[&key];
                    flags.push(AnomalyFlag {
                        metric: metric.to_string(),
                        author: author.clone(),
                        observed: values[i],
                        baseline_mean: baseline.mean,
                        baseline_std: baseline.std().unwrap_or(0.0),
                    });
                }
                self.history
                    .entry((author.clone(), metric.to_string()))
                    .or_default()
                    .push(values[i]);
            }
        }

        // population baselines feeding the candidate thresholds
        for weights in snapshot.relation_weights.values() {
            self.observe("relation/message_count", config.k_sigma, weights[0])?;
        }
        for counts in snapshot.influence.values() {
            self.observe("influence/additions", config.k_sigma, counts[0] as f64)?;
            self.observe("influence/deletions", config.k_sigma, counts[1] as f64)?;
            self.observe("influence/file_changes", config.k_sigma, counts[2] as f64)?;
        }

        let mut co_movements = Vec::new();
        let authors: BTreeSet<AuthorId> = metrics.keys().cloned().collect();
        for author in &authors {
            for (i, metric_a) in AUTHOR_METRICS.iter().enumerate() {
                for metric_b in &AUTHOR_METRICS[i + 1..] {
                    let a = self.history.get(&(author.clone(), metric_a.to_string()));
                    let b = self.history.get(&(author.clone(), metric_b.to_string()));
                    let (Some(a), Some(b)) = (a, b) else { continue };
                    let n = config.co_movement_windows;
                    if a.len() < n || b.len() < n {
                        continue;
                    }
                    let xa = &a[a.len() - n..];
                    let xb = &b[b.len() - n..];
                    if let Ok(r) = correlate_series(xa, xb) {
                        if r >= config.co_movement_r {
                            co_movements.push(CoMovement {
                                author: author.clone(),
                                metric_a: metric_a.to_string(),
                                metric_b: metric_b.to_string(),
                                r,
                            });
                        }
                    }
                }
            }
        }

        let hash = fnv64(serde_json::to_string(&snapshot).unwrap().as_bytes());
        self.snapshots.push(snapshot);
        self.snapshot_hashes.push(hash);

        Ok(MonitorOutcome {
            delta,
            flags,
            co_movements,
        })
    }
}

/// Candidate set with per-file vulnerability-class tags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaggedCandidates {
    pub candidates: CandidateSet,
    pub class_tags: BTreeMap<String, BTreeSet<VulnerabilityClass>>,
}

/// Analyze stage: run both filters, intersect, and tag classes via rules.
/// Files with no matching rule keep an empty class set but stay candidates.
pub fn analyze_candidates(
    delta: &TopologyDelta,
    snapshot: &Snapshot,
    thresholds: &ThresholdConfig,
    _flags: &[AnomalyFlag],
    rules: &[VulnClassRule],
) -> TaggedCandidates {
    let s_r = filter_relation_changes(delta, snapshot, thresholds);
    let s_i = filter_influence_changes(delta, thresholds);
    let candidates = select_components(&s_r, &s_i);
    let mut class_tags = BTreeMap::new();
    for file in &candidates.selected {
        let tags: BTreeSet<VulnerabilityClass> = rules
            .iter()
            .filter(|rule| rule.matches(file, snapshot))
            .map(|rule| rule.class)
            .collect();
        class_tags.insert(file.clone(), tags);
    }
    TaggedCandidates {
        candidates,
        class_tags,
    }
}

/// A prioritized instruction to inspect one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkOrder {
    pub file: String,
    pub score: f64,
    pub vulnerability_classes: BTreeSet<VulnerabilityClass>,
    pub trace: ReachabilityTrace,
    pub evidence: Vec<Evidence>,
    pub flags: Vec<AnomalyFlag>,
}

/// Plan stage: reachability trace and score per candidate, pruned below
/// the feasibility floor, ordered by score descending then path ascending.
pub fn plan_reachability(
    tagged: &TaggedCandidates,
    snapshot: &Snapshot,
    flags: &[AnomalyFlag],
    max_depth: usize,
    feasibility_floor: f64,
) -> Vec<WorkOrder> {
    let mut orders = Vec::new();
    for file in &tagged.candidates.selected {
        let evidence = tagged
            .candidates
            .provenance
            .get(file)
            .cloned()
            .unwrap_or_default();
        let trace = match reachability(file, &snapshot.files, &snapshot.dependencies, max_depth) {
            Ok(trace) => trace,
            Err(_) => ReachabilityTrace {
                origin: file.clone(),
                upstream_layers: Vec::new(),
                downstream_layers: Vec::new(),
                max_depth,
            },
        };
        let maintainers: BTreeSet<&AuthorId> = snapshot
            .maintainership
            .iter()
            .filter(|(_, f)| f == file)
            .map(|(a, _)| a)
            .collect();
        let order_flags: Vec<AnomalyFlag> = flags
            .iter()
            .filter(|flag| maintainers.contains(&flag.author))
            .cloned()
            .collect();
        let evidence_count = evidence.len() + order_flags.len();
        let score = evidence_count as f64 * (1.0 + trace.downstream_size() as f64);
        if score < feasibility_floor {
            continue;
        }
        orders.push(WorkOrder {
            file: file.clone(),
            score,
            vulnerability_classes: tagged.class_tags.get(file).cloned().unwrap_or_default(),
            trace,
            evidence,
            flags: order_flags,
        });
    }
    orders.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.file.cmp(&b.file))
    });
    orders
}

/// One (work order, plugin) analyzer outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerFinding {
    pub file: String,
    pub plugin: String,
    pub finding: String,
    pub severity: Severity,
}

/// The loop's final output for one window pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreatReport {
    pub schema_version: u32,
    pub run_id: String,
    pub from_window: Window,
    pub to_window: Window,
    pub candidates: CandidateSet,
    pub work_orders: Vec<WorkOrder>,
    pub findings: Vec<AnalyzerFinding>,
    pub flags: Vec<AnomalyFlag>,
    pub co_movements: Vec<CoMovement>,
    pub diagnostics: Vec<String>,
}

/// Execute stage: run every registered analyzer on every work order;
/// failures are recorded as diagnostics and never abort the run.
pub fn execute_plan(
    run_id: &str,
    outcome: &MonitorOutcome,
    tagged: &TaggedCandidates,
    work_orders: Vec<WorkOrder>,
    snapshot: &Snapshot,
    registry: &AnalyzerRegistry,
) -> ThreatReport {
    let mut findings = Vec::new();
    let mut diagnostics = Vec::new();
    if registry.is_empty() {
        diagnostics.push("no analyzer plugins configured; findings will be empty".to_string());
    }
    for analyzer in registry.iter() {
        for order in &work_orders {
            match analyzer.analyze(order, snapshot) {
                Ok(results) => {
                    for Finding {
                        plugin,
                        text,
                        severity,
                    } in results
                    {
                        findings.push(AnalyzerFinding {
                            file: order.file.clone(),
                            plugin,
                            finding: text,
                            severity,
                        });
                    }
                }
                Err(failure) => diagnostics.push(format!(
                    "plugin {} failed on {}: {failure}",
                    analyzer.name(),
                    order.file
                )),
            }
        }
    }
    findings.sort_by(|a, b| a.plugin.cmp(&b.plugin).then_with(|| a.file.cmp(&b.file)));
    ThreatReport {
        schema_version: 1,
        run_id: run_id.to_string(),
        from_window: outcome.delta.from_window,
        to_window: outcome.delta.to_window,
        candidates: tagged.candidates.clone(),
        work_orders,
        findings,
        flags: outcome.flags.clone(),
        co_movements: outcome.co_movements.clone(),
        diagnostics,
    }
}

/// Runs the full loop over a pre-built snapshot series, one report per
/// monitor step after the first.
pub fn run_detection(
    snapshots: Vec<Snapshot>,
    config: &LoopConfig,
    registry: &AnalyzerRegistry,
) -> Result<Vec<ThreatReport>, MapekError> {
    let rules = compile_rules(&config.rules)?;
    let mut store = KnowledgeStore::new();
    let mut reports = Vec::new();
    for (step, snapshot) in snapshots.into_iter().enumerate() {
        // thresholds reflect nominal behaviour before this window
        let thresholds = store.derive_thresholds(config);
        let snapshot_for_analysis = snapshot.clone();
        let outcome = store.monitor_step(snapshot, config)?;
        if step == 0 {
            continue;
        }
        let tagged = analyze_candidates(
            &outcome.delta,
            &snapshot_for_analysis,
            &thresholds,
            &outcome.flags,
            &rules,
        );
        let orders = plan_reachability(
            &tagged,
            &snapshot_for_analysis,
            &outcome.flags,
            config.max_depth,
            config.feasibility_floor,
        );
        let report = execute_plan(
            &format!("step-{step}"),
            &outcome,
            &tagged,
            orders,
            &snapshot_for_analysis,
            registry,
        );
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AuthorId, CommitRecord, FileChange, MessageRecord, MessageSource};
    use crate::mapek::plugin::FailingAnalyzer;
    use crate::topology::{build_snapshot, SnapshotConfig};
    use chrono::{DateTime, Duration};
    use std::collections::BTreeSet;

    fn ts(s: &str) -> DateTime<chrono::FixedOffset> {
        DateTime::parse_from_rfc3339(s).unwrap()
    }

    fn month_window(index: u32) -> Window {
        let start = ts("2023-01-01T00:00:00+00:00") + Duration::days(30 * index as i64);
        Window::new(start, start + Duration::days(30)).unwrap()
    }

    fn commit_in(window: Window, author: &str, changes: Vec<FileChange>, id: &str) -> CommitRecord {
        CommitRecord {
            commit_id: id.to_string(),
            author_name: author.to_string(),
            author_email: format!("{author}@x.com"),
            canonical_author: AuthorId::new(author),
            timestamp: window.start + Duration::hours(12),
            is_merge: false,
            file_changes: changes,
        }
    }

    fn message_in(window: Window, author: &str, thread: &str, body: &str, id: &str) -> MessageRecord {
        MessageRecord {
            message_id: id.to_string(),
            source: MessageSource::Issue,
            thread_id: thread.to_string(),
            in_reply_to: None,
            canonical_author: AuthorId::new(author),
            timestamp: window.start + Duration::hours(6),
            body: body.to_string(),
        }
    }

    fn snapshot_for(
        window: Window,
        commits: &[CommitRecord],
        messages: &[MessageRecord],
    ) -> Snapshot {
        build_snapshot(commits, messages, &BTreeSet::new(), window, &SnapshotConfig::default())
    }

    #[test]
    fn steady_state_no_flags() {
        let mut store = KnowledgeStore::new();
        let config = LoopConfig::default();
        for i in 0..8 {
            let window = month_window(i);
            let commits = vec![commit_in(
                window,
                "dev",
                vec![FileChange::lines("f1", 10, 5)],
                &format!("c{i}"),
            )];
            let outcome = store.monitor_step(snapshot_for(window, &commits, &[]), &config).unwrap();
            assert!(outcome.flags.is_empty(), "window {i}");
            if i > 0 {
                // identical content, different window: only influence is same-valued
                assert!(outcome.delta.new_or_changed_influence.is_empty());
            }
        }
    }

    #[test]
    fn avg_total_jump_is_flagged() {
        let mut store = KnowledgeStore::new();
        let config = LoopConfig { k_sigma: 2.0, ..Default::default() };
        for i in 0..6 {
            let window = month_window(i);
            let commits = vec![commit_in(
                window,
                "dev",
                vec![FileChange::lines("f1", 30, 16)],
                &format!("c{i}"),
            )];
            store.monitor_step(snapshot_for(window, &commits, &[]), &config).unwrap();
        }
        let window = month_window(6);
        let commits = vec![commit_in(
            window,
            "dev",
            vec![FileChange::lines("f1", 100, 31)],
            "spike",
        )];
        let outcome = store.monitor_step(snapshot_for(window, &commits, &[]), &config).unwrap();
        assert!(outcome
            .flags
            .iter()
            .any(|f| f.metric == "avg_total" && f.author == AuthorId::new("dev")));
    }

    #[test]
    fn out_of_order_snapshot_rejected() {
        let mut store = KnowledgeStore::new();
        let config = LoopConfig::default();
        store
            .monitor_step(snapshot_for(month_window(1), &[], &[]), &config)
            .unwrap();
        let err = store
            .monitor_step(snapshot_for(month_window(0), &[], &[]), &config)
            .unwrap_err();
        assert!(matches!(err, MapekError::Sequencing(_)));
    }

    #[test]
    fn snapshots_are_append_only_by_hash() {
        let mut store = KnowledgeStore::new();
        let config = LoopConfig::default();
        let mut hashes = Vec::new();
        for i in 0..4 {
            let window = month_window(i);
            let commits = vec![commit_in(
                window,
                "dev",
                vec![FileChange::lines("f1", i as u64, 1)],
                &format!("c{i}"),
            )];
            store.monitor_step(snapshot_for(window, &commits, &[]), &config).unwrap();
            hashes.push(store.snapshot_hashes().to_vec());
        }
        for (i, h) in hashes.iter().enumerate() {
            assert_eq!(&store.snapshot_hashes()[..=i], h.as_slice());
        }
    }

    #[test]
    fn co_movement_detected_on_correlated_rise() {
        let mut store = KnowledgeStore::new();
        let config = LoopConfig { co_movement_windows: 6, ..Default::default() };
        let mut last = None;
        for i in 0..7 {
            let window = month_window(i);
            // rising avg_total and rising hostility together
            let lines = 10 + 10 * i as u64;
            let commits = vec![commit_in(
                window,
                "dev",
                vec![FileChange::lines("f1", lines, 0)],
                &format!("c{i}"),
            )];
            // polarity falls linearly as the terrible/great mix shifts
            let hostility = format!(
                "{}{}",
                "great ".repeat(7 - i as usize),
                "terrible ".repeat(i as usize)
            );
            let messages = vec![
                message_in(window, "dev", "t", &hostility, &format!("m{i}a")),
                message_in(window, "other", "t", "ok", &format!("m{i}b")),
            ];
            last = Some(
                store
                    .monitor_step(snapshot_for(window, &commits, &messages), &config)
                    .unwrap(),
            );
        }
        let outcome = last.unwrap();
        assert!(
            outcome
                .co_movements
                .iter()
                .any(|c| c.author == AuthorId::new("dev")),
            "co-movements: {:?}",
            outcome.co_movements
        );
    }

    #[test]
    fn empty_delta_analyzes_to_nothing() {
        let window = month_window(0);
        let snapshot = snapshot_for(window, &[], &[]);
        let delta = snapshot_delta(&snapshot, &snapshot, 0.0).unwrap();
        let rules = compile_rules(&default_rule_specs()).unwrap();
        let tagged = analyze_candidates(&delta, &snapshot, &ThresholdConfig::default(), &[], &rules);
        assert!(tagged.candidates.selected.is_empty());
    }

    #[test]
    fn xz_pattern_gets_implementation_bug_tag() {
        let w0 = month_window(0);
        let w1 = month_window(1);
        let s0 = snapshot_for(w0, &[], &[]);
        let commits = vec![commit_in(
            w1,
            "attacker",
            vec![
                FileChange::binary("tests/files/evil.xz"),
                FileChange::lines("build-to-host.m4", 150, 0),
            ],
            "bd",
        )];
        let messages = vec![
            message_in(w1, "attacker", "t", "please merge this", "m1"),
            message_in(w1, "maintainer", "t", "ok", "m2"),
        ];
        let s1 = snapshot_for(w1, &commits, &messages);
        let delta = snapshot_delta(&s0, &s1, 0.0).unwrap();
        let rules = compile_rules(&default_rule_specs()).unwrap();
        let tagged = analyze_candidates(&delta, &s1, &ThresholdConfig::default(), &[], &rules);
        assert!(tagged.candidates.selected.contains("tests/files/evil.xz"));
        assert!(tagged.class_tags["tests/files/evil.xz"]
            .contains(&VulnerabilityClass::ImplementationBug));
    }

    #[test]
    fn plan_scores_and_orders() {
        let w1 = month_window(1);
        let commits = vec![
            commit_in(
                w1,
                "attacker",
                vec![FileChange::lines("core.c", 500, 0), FileChange::lines("iso.c", 500, 0)],
                "c",
            ),
        ];
        let mut snapshot = snapshot_for(w1, &commits, &[]);
        // core.c has 3 downstream dependents; iso.c none
        snapshot.dependencies = BTreeSet::from([
            ("d1.c".to_string(), "core.c".to_string()),
            ("d2.c".to_string(), "core.c".to_string()),
            ("d3.c".to_string(), "core.c".to_string()),
        ]);
        for (a, b) in &snapshot.dependencies {
            snapshot.files.insert(a.clone());
            snapshot.files.insert(b.clone());
        }
        let mut tagged = TaggedCandidates::default();
        for file in ["core.c", "iso.c"] {
            tagged.candidates.selected.insert(file.to_string());
            tagged.candidates.provenance.insert(
                file.to_string(),
                vec![
                    Evidence::Influence {
                        author: AuthorId::new("attacker"),
                        file: file.to_string(),
                        delta: vec![500, 0, 1],
                    };
                    2
                ],
            );
        }
        let orders = plan_reachability(&tagged, &snapshot, &[], 3, 1.0);
        assert_eq!(orders.len(), 2);
        assert_eq!(orders[0].file, "core.c");
        assert_eq!(orders[0].score, 8.0); // 2 evidence * (1 + 3 downstream)
        assert_eq!(orders[1].score, 2.0); // 2 evidence * (1 + 0)
        // pruning saturation
        let pruned = plan_reachability(&tagged, &snapshot, &[], 3, 100.0);
        assert!(pruned.is_empty());
    }

    #[test]
    fn execute_isolates_plugin_failures() {
        let w1 = month_window(1);
        let snapshot = snapshot_for(w1, &[], &[]);
        let outcome = MonitorOutcome {
            delta: snapshot_delta(&snapshot, &snapshot, 0.0).unwrap(),
            flags: vec![],
            co_movements: vec![],
        };
        let tagged = TaggedCandidates::default();
        let order = WorkOrder {
            file: "f.c".into(),
            score: 1.0,
            vulnerability_classes: BTreeSet::new(),
            trace: ReachabilityTrace {
                origin: "f.c".into(),
                upstream_layers: vec![],
                downstream_layers: vec![],
                max_depth: 1,
            },
            evidence: vec![],
            flags: vec![],
        };
        let mut registry = AnalyzerRegistry::empty();
        registry.register(Box::new(FailingAnalyzer));
        let report = execute_plan("r", &outcome, &tagged, vec![order.clone(), order], &snapshot, &registry);
        assert_eq!(report.work_orders.len(), 2);
        assert!(report.findings.is_empty());
        assert_eq!(report.diagnostics.len(), 2);
        assert_eq!(report.schema_version, 1);
    }

    #[test]
    fn execute_with_no_plugins_warns() {
        let w1 = month_window(1);
        let snapshot = snapshot_for(w1, &[], &[]);
        let outcome = MonitorOutcome {
            delta: snapshot_delta(&snapshot, &snapshot, 0.0).unwrap(),
            flags: vec![],
            co_movements: vec![],
        };
        let report = execute_plan(
            "r",
            &outcome,
            &TaggedCandidates::default(),
            vec![],
            &snapshot,
            &AnalyzerRegistry::empty(),
        );
        assert!(report.findings.is_empty());
        assert_eq!(report.diagnostics.len(), 1);
    }

    #[test]
    fn loop_config_toml_round_trip() {
        let config = LoopConfig::default();
        let doc = toml::to_string(&config).unwrap();
        let back = LoopConfig::from_toml(&doc).unwrap();
        assert_eq!(back.k_sigma, config.k_sigma);
        assert_eq!(back.rules.len(), config.rules.len());
        let partial = LoopConfig::from_toml("k_sigma = 2.5\n").unwrap();
        assert_eq!(partial.k_sigma, 2.5);
        assert_eq!(partial.window_days, 30);
    }
}
