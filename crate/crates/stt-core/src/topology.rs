//! Socio-technical topology snapshots: the (S, D, A, R, P, W, M, K, I)
//! tuple per time window, deltas between snapshots, and the candidate
//! filters over relation and influence change.

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::ingest::{AuthorId, CommitRecord, MessageRecord};
use crate::textmetrics::{sentiment, Lexicon};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("config error: {0}")]
    Config(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("not found: {0}")]
    NotFound(String),
}

/// Half-open time window [start, end).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
}

impl Window {
    pub fn new(
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
    ) -> Result<Self, TopologyError> {
        if end <= start {
            return Err(TopologyError::Config(format!(
                "window end {end} must be after start {start}"
            )));
        }
        Ok(Window { start, end })
    }

    pub fn contains(&self, t: DateTime<FixedOffset>) -> bool {
        t >= self.start && t < self.end
    }
}

/// Unordered pair of distinct authors, stored sorted for determinism.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuthorPair(AuthorId, AuthorId);

impl AuthorPair {
    pub fn new(a: AuthorId, b: AuthorId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(AuthorPair(a, b)),
            std::cmp::Ordering::Greater => Some(AuthorPair(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> &AuthorId {
        &self.0
    }

    pub fn second(&self) -> &AuthorId {
        &self.1
    }

    pub fn members(&self) -> [&AuthorId; 2] {
        [&self.0, &self.1]
    }
}

pub const DEFAULT_RELATION_PARAMS: [&str; 2] = ["message_count", "mean_sentiment"];
pub const DEFAULT_ACTIVITIES: [&str; 3] = ["additions", "deletions", "file_changes"];

/// One materialized topology tuple for a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SnapshotDto", from = "SnapshotDto")]
pub struct Snapshot {
    pub window: Window,
    /// S: source files.
    pub files: BTreeSet<String>,
    /// D: (s, s') means s depends on s'.
    pub dependencies: BTreeSet<(String, String)>,
    /// A: authors active in the window.
    pub authors: BTreeSet<AuthorId>,
    /// R: unordered author pairs that communicated.
    pub relations: BTreeSet<AuthorPair>,
    /// P: relation parameter names, fixing the layout of W vectors.
    pub relation_params: Vec<String>,
    /// W: per-relation weight vector of length |P|.
    pub relation_weights: BTreeMap<AuthorPair, Vec<f64>>,
    /// M: directed author -> file maintainership pairs.
    pub maintainership: BTreeSet<(AuthorId, String)>,
    /// K: activity names, fixing the layout of I vectors.
    pub activities: Vec<String>,
    /// I: per-maintainership activity counts of length |K|.
    pub influence: BTreeMap<(AuthorId, String), Vec<u64>>,
    /// Files that saw a binary change in the window (rule-engine metadata,
    /// not part of the tuple proper).
    pub binary_files: BTreeSet<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RelationDto {
    a1: AuthorId,
    a2: AuthorId,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InfluenceDto {
    author: AuthorId,
    file: String,
    counts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnapshotDto {
    window: Window,
    files: BTreeSet<String>,
    dependencies: Vec<(String, String)>,
    authors: BTreeSet<AuthorId>,
    relation_params: Vec<String>,
    relations: Vec<RelationDto>,
    activities: Vec<String>,
    influence: Vec<InfluenceDto>,
    binary_files: BTreeSet<String>,
}

impl From<Snapshot> for SnapshotDto {
    fn from(s: Snapshot) -> Self {
        SnapshotDto {
            window: s.window,
            files: s.files,
            dependencies: s.dependencies.into_iter().collect(),
            authors: s.authors,
            relation_params: s.relation_params,
            relations: s
                .relation_weights
                .into_iter()
                .map(|(pair, weights)| RelationDto {
                    a1: pair.0,
                    a2: pair.1,
                    weights,
                })
                .collect(),
            activities: s.activities,
            influence: s
                .influence
                .into_iter()
                .map(|((author, file), counts)| InfluenceDto {
                    author,
                    file,
                    counts,
                })
                .collect(),
            binary_files: s.binary_files,
        }
    }
}

impl From<SnapshotDto> for Snapshot {
    fn from(dto: SnapshotDto) -> Self {
        let relation_weights: BTreeMap<AuthorPair, Vec<f64>> = dto
            .relations
            .into_iter()
            .filter_map(|r| AuthorPair::new(r.a1, r.a2).map(|p| (p, r.weights)))
            .collect();
        let influence: BTreeMap<(AuthorId, String), Vec<u64>> = dto
            .influence
            .into_iter()
            .map(|i| ((i.author, i.file), i.counts))
            .collect();
        Snapshot {
            window: dto.window,
            files: dto.files,
            dependencies: dto.dependencies.into_iter().collect(),
            authors: dto.authors,
            relations: relation_weights.keys().cloned().collect(),
            relation_params: dto.relation_params,
            relation_weights,
            maintainership: influence.keys().cloned().collect(),
            activities: dto.activities,
            influence,
            binary_files: dto.binary_files,
        }
    }
}

/// Knobs for snapshot construction.
#[derive(Debug, Clone)]
pub struct SnapshotConfig {
    /// Merge commits double-count lines; excluded from aggregation by default.
    pub include_merges: bool,
    pub lexicon: Lexicon,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        SnapshotConfig {
            include_merges: false,
            lexicon: Lexicon::builtin(),
        }
    }
}

pub fn build_snapshot(
    commits: &[CommitRecord],
    messages: &[MessageRecord],
    dependency_edges: &BTreeSet<(String, String)>,
    window: Window,
    config: &SnapshotConfig,
) -> Snapshot {
    let mut files: BTreeSet<String> = BTreeSet::new();
    let mut authors: BTreeSet<AuthorId> = BTreeSet::new();
    let mut influence: BTreeMap<(AuthorId, String), Vec<u64>> = BTreeMap::new();
    let mut binary_files: BTreeSet<String> = BTreeSet::new();

    for commit in commits {
        if !window.contains(commit.timestamp) || (commit.is_merge && !config.include_merges) {
            continue;
        }
        authors.insert(commit.canonical_author.clone());
        for change in &commit.file_changes {
            files.insert(change.path.clone());
            if change.binary {
                binary_files.insert(change.path.clone());
            }
            let counts = influence
                .entry((commit.canonical_author.clone(), change.path.clone()))
                .or_insert_with(|| vec![0; DEFAULT_ACTIVITIES.len()]);
            counts[0] += change.additions;
            counts[1] += change.deletions;
            counts[2] += 1;
        }
    }

    for (src, dst) in dependency_edges {
        files.insert(src.clone());
        files.insert(dst.clone());
    }

    // Relations: authors sharing a thread inside the window.
    // message_count = same-thread message pairs between the two authors;
    // mean_sentiment = mean polarity of either author's messages in shared threads.
    let mut by_thread: BTreeMap<&str, Vec<&MessageRecord>> = BTreeMap::new();
    for message in messages {
        if !window.contains(message.timestamp) {
            continue;
        }
        authors.insert(message.canonical_author.clone());
        by_thread
            .entry(message.thread_id.as_str())
            .or_default()
            .push(message);
    }

    let mut pair_counts: BTreeMap<AuthorPair, u64> = BTreeMap::new();
    let mut pair_polarity: BTreeMap<AuthorPair, Vec<f64>> = BTreeMap::new();
    for thread in by_thread.values() {
        let mut per_author: BTreeMap<&AuthorId, Vec<&MessageRecord>> = BTreeMap::new();
        for message in thread {
            per_author
                .entry(&message.canonical_author)
                .or_default()
                .push(message);
        }
        let participants: Vec<&AuthorId> = per_author.keys().copied().collect();
        for i in 0..participants.len() {
            for j in (i + 1)..participants.len() {
                let pair =
                    AuthorPair::new(participants[i].clone(), participants[j].clone()).unwrap();
                let count_i = per_author[participants[i]].len() as u64;
                let count_j = per_author[participants[j]].len() as u64;
                *pair_counts.entry(pair.clone()).or_default() += count_i * count_j;
                let polarities = pair_polarity.entry(pair).or_default();
                for message in per_author[participants[i]]
                    .iter()
                    .chain(per_author[participants[j]].iter())
                {
                    polarities.push(sentiment(&message.body, &config.lexicon).0);
                }
            }
        }
    }

    let mut relation_weights: BTreeMap<AuthorPair, Vec<f64>> = BTreeMap::new();
    for (pair, count) in pair_counts {
        let polarities = &pair_polarity[&pair];
        let mean_sentiment = if polarities.is_empty() {
            0.0
        } else {
            polarities.iter().sum::<f64>() / polarities.len() as f64
        };
        relation_weights.insert(pair, vec![count as f64, mean_sentiment]);
    }

    Snapshot {
        window,
        files,
        dependencies: dependency_edges.clone(),
        authors,
        relations: relation_weights.keys().cloned().collect(),
        relation_params: DEFAULT_RELATION_PARAMS.iter().map(|s| s.to_string()).collect(),
        relation_weights,
        maintainership: influence.keys().cloned().collect(),
        activities: DEFAULT_ACTIVITIES.iter().map(|s| s.to_string()).collect(),
        influence,
        binary_files,
    }
}

/// The difference between two snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DeltaDto", from = "DeltaDto")]
pub struct TopologyDelta {
    pub from_window: Window,
    pub to_window: Window,
    /// Relations new in R2 or whose weight moved by more than epsilon,
    /// with per-parameter weight deltas (full W2 value for new relations).
    pub new_or_changed_relations: BTreeMap<AuthorPair, Vec<f64>>,
    /// Influence entries new in M2 or with changed counts, as signed deltas.
    pub new_or_changed_influence: BTreeMap<(AuthorId, String), Vec<i64>>,
    pub added_files: BTreeSet<String>,
    pub removed_files: BTreeSet<String>,
    pub added_authors: BTreeSet<AuthorId>,
    pub removed_authors: BTreeSet<AuthorId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RelationDeltaDto {
    a1: AuthorId,
    a2: AuthorId,
    weight_delta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InfluenceDeltaDto {
    author: AuthorId,
    file: String,
    delta: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DeltaDto {
    from_window: Window,
    to_window: Window,
    new_or_changed_relations: Vec<RelationDeltaDto>,
    new_or_changed_influence: Vec<InfluenceDeltaDto>,
    added_files: BTreeSet<String>,
    removed_files: BTreeSet<String>,
    added_authors: BTreeSet<AuthorId>,
    removed_authors: BTreeSet<AuthorId>,
}

impl From<TopologyDelta> for DeltaDto {
    fn from(d: TopologyDelta) -> Self {
        DeltaDto {
            from_window: d.from_window,
            to_window: d.to_window,
            new_or_changed_relations: d
                .new_or_changed_relations
                .into_iter()
                .map(|(pair, weight_delta)| RelationDeltaDto {
                    a1: pair.0,
                    a2: pair.1,
                    weight_delta,
                })
                .collect(),
            new_or_changed_influence: d
                .new_or_changed_influence
                .into_iter()
                .map(|((author, file), delta)| InfluenceDeltaDto {
                    author,
                    file,
                    delta,
                })
                .collect(),
            added_files: d.added_files,
            removed_files: d.removed_files,
            added_authors: d.added_authors,
            removed_authors: d.removed_authors,
        }
    }
}

impl From<DeltaDto> for TopologyDelta {
    fn from(dto: DeltaDto) -> Self {
        TopologyDelta {
            from_window: dto.from_window,
            to_window: dto.to_window,
            new_or_changed_relations: dto
                .new_or_changed_relations
                .into_iter()
                .filter_map(|r| AuthorPair::new(r.a1, r.a2).map(|p| (p, r.weight_delta)))
                .collect(),
            new_or_changed_influence: dto
                .new_or_changed_influence
                .into_iter()
                .map(|i| ((i.author, i.file), i.delta))
                .collect(),
            added_files: dto.added_files,
            removed_files: dto.removed_files,
            added_authors: dto.added_authors,
            removed_authors: dto.removed_authors,
        }
    }
}

impl TopologyDelta {
    pub fn is_empty(&self) -> bool {
        self.new_or_changed_relations.is_empty()
            && self.new_or_changed_influence.is_empty()
            && self.added_files.is_empty()
            && self.removed_files.is_empty()
            && self.added_authors.is_empty()
            && self.removed_authors.is_empty()
    }
}

pub fn snapshot_delta(
    s1: &Snapshot,
    s2: &Snapshot,
    epsilon: f64,
) -> Result<TopologyDelta, TopologyError> {
    if s1.relation_params != s2.relation_params {
        return Err(TopologyError::Schema(
            "relation parameter schemas differ".into(),
        ));
    }
    if s1.activities != s2.activities {
        return Err(TopologyError::Schema("activity schemas differ".into()));
    }

    let mut new_or_changed_relations = BTreeMap::new();
    for (pair, w2) in &s2.relation_weights {
        match s1.relation_weights.get(pair) {
            None => {
                new_or_changed_relations.insert(pair.clone(), w2.clone());
            }
            Some(w1) => {
                let delta: Vec<f64> = w2.iter().zip(w1).map(|(b, a)| b - a).collect();
                if delta.iter().any(|d| d.abs() > epsilon) {
                    new_or_changed_relations.insert(pair.clone(), delta);
                }
            }
        }
    }

    let mut new_or_changed_influence = BTreeMap::new();
    for (key, i2) in &s2.influence {
        match s1.influence.get(key) {
            None => {
                new_or_changed_influence
                    .insert(key.clone(), i2.iter().map(|&v| v as i64).collect());
            }
            Some(i1) => {
                let delta: Vec<i64> = i2
                    .iter()
                    .zip(i1)
                    .map(|(&b, &a)| b as i64 - a as i64)
                    .collect();
                if delta.iter().any(|&d| d != 0) {
                    new_or_changed_influence.insert(key.clone(), delta);
                }
            }
        }
    }

    Ok(TopologyDelta {
        from_window: s1.window,
        to_window: s2.window,
        new_or_changed_relations,
        new_or_changed_influence,
        added_files: s2.files.difference(&s1.files).cloned().collect(),
        removed_files: s1.files.difference(&s2.files).cloned().collect(),
        added_authors: s2.authors.difference(&s1.authors).cloned().collect(),
        removed_authors: s1.authors.difference(&s2.authors).cloned().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Any,
    All,
}

impl Aggregation {
    fn meets(&self, values: &[f64], thresholds: &[f64]) -> bool {
        let mut checks = values.iter().zip(thresholds).map(|(v, t)| v >= t);
        match self {
            Aggregation::Any => checks.any(|c| c),
            Aggregation::All => checks.all(|c| c),
        }
    }
}

/// Per-parameter/per-activity thresholds for the candidate filters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub relation_thresholds: Vec<f64>,
    pub influence_thresholds: Vec<i64>,
    pub relation_aggregation: Aggregation,
    pub influence_aggregation: Aggregation,
    pub weight_change_epsilon: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            relation_thresholds: vec![0.0; DEFAULT_RELATION_PARAMS.len()],
            influence_thresholds: vec![0; DEFAULT_ACTIVITIES.len()],
            relation_aggregation: Aggregation::Any,
            influence_aggregation: Aggregation::Any,
            weight_change_epsilon: 0.0,
        }
    }
}

/// Why a file was selected: the relation or influence entry that triggered it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Relation {
        a1: AuthorId,
        a2: AuthorId,
        weight_delta: Vec<f64>,
        weights: Vec<f64>,
    },
    Influence {
        author: AuthorId,
        file: String,
        delta: Vec<i64>,
    },
}

/// A file set plus per-file provenance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FileSelection {
    pub files: BTreeSet<String>,
    pub provenance: BTreeMap<String, Vec<Evidence>>,
}

impl FileSelection {
    fn add(&mut self, file: &str, evidence: Evidence) {
        self.files.insert(file.to_string());
        self.provenance
            .entry(file.to_string())
            .or_default()
            .push(evidence);
    }
}

/// S_R: files involved in a new or changed author relation whose weight
/// vector in the later snapshot meets the relation thresholds. A file is
/// involved in (a1, a2) when either author maintains it per M2.
pub fn filter_relation_changes(
    delta: &TopologyDelta,
    snapshot2: &Snapshot,
    thresholds: &ThresholdConfig,
) -> FileSelection {
    let mut selection = FileSelection::default();
    for (pair, weight_delta) in &delta.new_or_changed_relations {
        let weights = match snapshot2.relation_weights.get(pair) {
            Some(w) => w,
            None => continue, // delta not from this snapshot; nothing to judge
        };
        if !thresholds
            .relation_aggregation
            .meets(weights, &thresholds.relation_thresholds)
        {
            continue;
        }
        for (author, file) in &snapshot2.maintainership {
            if pair.members().contains(&author) {
                selection.add(
                    file,
                    Evidence::Relation {
                        a1: pair.first().clone(),
                        a2: pair.second().clone(),
                        weight_delta: weight_delta.clone(),
                        weights: weights.clone(),
                    },
                );
            }
        }
    }
    selection
}

/// S_I: files whose per-activity influence delta meets the influence thresholds.
pub fn filter_influence_changes(
    delta: &TopologyDelta,
    thresholds: &ThresholdConfig,
) -> FileSelection {
    let mut selection = FileSelection::default();
    for ((author, file), counts) in &delta.new_or_changed_influence {
        let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let limits: Vec<f64> = thresholds
            .influence_thresholds
            .iter()
            .map(|&t| t as f64)
            .collect();
        if thresholds.influence_aggregation.meets(&as_f64, &limits) {
            selection.add(
                file,
                Evidence::Influence {
                    author: author.clone(),
                    file: file.clone(),
                    delta: counts.clone(),
                },
            );
        }
    }
    selection
}

/// S_R, S_I, and their intersection with merged provenance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub s_r: BTreeSet<String>,
    pub s_i: BTreeSet<String>,
    pub selected: BTreeSet<String>,
    pub provenance: BTreeMap<String, Vec<Evidence>>,
}

pub fn select_components(s_r: &FileSelection, s_i: &FileSelection) -> CandidateSet {
    let selected: BTreeSet<String> = s_r.files.intersection(&s_i.files).cloned().collect();
    let mut provenance: BTreeMap<String, Vec<Evidence>> = BTreeMap::new();
    for file in &selected {
        let mut merged = Vec::new();
        if let Some(entries) = s_r.provenance.get(file) {
            merged.extend(entries.iter().cloned());
        }
        if let Some(entries) = s_i.provenance.get(file) {
            merged.extend(entries.iter().cloned());
        }
        provenance.insert(file.clone(), merged);
    }
    CandidateSet {
        s_r: s_r.files.clone(),
        s_i: s_i.files.clone(),
        selected,
        provenance,
    }
}

/// Breadth-first reachability layers over D, both directions, cycle-safe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityTrace {
    pub origin: String,
    /// Layer k holds files reachable in k+1 hops following dependency
    /// direction: what the origin (transitively) depends on.
    pub upstream_layers: Vec<BTreeSet<String>>,
    /// What (transitively) depends on the origin.
    pub downstream_layers: Vec<BTreeSet<String>>,
    pub max_depth: usize,
}

impl ReachabilityTrace {
    pub fn downstream_size(&self) -> usize {
        self.downstream_layers.iter().map(BTreeSet::len).sum()
    }
}

pub fn reachability(
    origin: &str,
    files: &BTreeSet<String>,
    dependencies: &BTreeSet<(String, String)>,
    max_depth: usize,
) -> Result<ReachabilityTrace, TopologyError> {
    if !files.contains(origin) {
        return Err(TopologyError::NotFound(format!(
            "origin file {origin:?} not in S"
        )));
    }
    let max_depth = max_depth.max(1);
    let expand = |seed: &str, forward: bool| -> Vec<BTreeSet<String>> {
        let mut layers = Vec::new();
        let mut visited: BTreeSet<&str> = BTreeSet::new();
        visited.insert(seed);
        let mut frontier: BTreeSet<&str> = BTreeSet::new();
        frontier.insert(seed);
        for _ in 0..max_depth {
            let mut next: BTreeSet<&str> = BTreeSet::new();
            for (src, dst) in dependencies {
                let (from, to) = if forward { (src, dst) } else { (dst, src) };
                if frontier.contains(from.as_str()) && !visited.contains(to.as_str()) {
                    next.insert(to);
                }
            }
            if next.is_empty() {
                break;
            }
            visited.extend(next.iter());
            layers.push(next.iter().map(|s| s.to_string()).collect());
            frontier = next;
        }
        layers
    };
    Ok(ReachabilityTrace {
        origin: origin.to_string(),
        upstream_layers: expand(origin, true),
        downstream_layers: expand(origin, false),
        max_depth,
    })
}

/// Parses the dependency edge-list format: one `src -> dst` per line,
/// `#` comments.
pub fn parse_dependency_edges(text: &str) -> Result<BTreeSet<(String, String)>, TopologyError> {
    let mut edges = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((src, dst)) = line.split_once("->") else {
            return Err(TopologyError::Config(format!(
                "dependency file line {}: expected `src -> dst`",
                lineno + 1
            )));
        };
        let src = src.trim();
        let dst = dst.trim();
        if src.is_empty() || dst.is_empty() {
            return Err(TopologyError::Config(format!(
                "dependency file line {}: empty endpoint",
                lineno + 1
            )));
        }
        edges.insert((src.to_string(), dst.to_string()));
    }
    Ok(edges)
}
