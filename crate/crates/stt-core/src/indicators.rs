//! Per-author threat indicators: line-change statistics, centrality over
//! time, time-of-day profiles, the communication-sentiment graph, and
//! Pearson co-movement between indicator series.

use chrono::{Duration, Timelike};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use thiserror::Error;

use crate::ingest::{AuthorId, CommitRecord, MessageRecord};
use crate::textmetrics::{sentiment, Lexicon};
use crate::topology::{AuthorPair, Window};

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
    #[error("unknown centrality measure: {0}")]
    UnknownMeasure(String),
}

/// File-level line-change statistics for one author over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorChangeStats {
    pub author: AuthorId,
    pub period: Window,
    pub total_file_changes: u64,
    pub avg_additions: f64,
    pub avg_deletions: f64,
    pub avg_total: f64,
    pub std_additions: f64,
    pub std_deletions: f64,
    pub std_total: f64,
    /// Set when there were fewer than 2 observations, where the sample
    /// standard deviation is undefined and reported as 0.
    pub std_undefined: bool,
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64, bool) {
    if values.is_empty() {
        return (0.0, 0.0, true);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0, true);
    }
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, variance.sqrt(), false)
}

/// One observation per FileChange in the author's non-excluded commits in
/// the period. Binary changes contribute zero lines but still count as a
/// file-change event when `include_binary`.
pub fn author_change_stats(
    commits: &[CommitRecord],
    author: &AuthorId,
    period: Window,
    include_merges: bool,
    include_binary: bool,
) -> AuthorChangeStats {
    let mut additions = Vec::new();
    let mut deletions = Vec::new();
    let mut totals = Vec::new();
    for commit in commits {
        if &commit.canonical_author != author
            || !period.contains(commit.timestamp)
            || (commit.is_merge && !include_merges)
        {
            continue;
        }
        for change in &commit.file_changes {
            if change.binary && !include_binary {
                continue;
            }
            let (a, d) = if change.binary {
                (0.0, 0.0)
            } else {
                (change.additions as f64, change.deletions as f64)
            };
            additions.push(a);
            deletions.push(d);
            totals.push(a + d);
        }
    }
    let (avg_additions, std_additions, undef_a) = mean_and_sample_std(&additions);
    let (avg_deletions, std_deletions, _) = mean_and_sample_std(&deletions);
    let (avg_total, std_total, _) = mean_and_sample_std(&totals);
    AuthorChangeStats {
        author: author.clone(),
        period,
        total_file_changes: additions.len() as u64,
        avg_additions,
        avg_deletions,
        avg_total,
        std_additions,
        std_deletions,
        std_total,
        std_undefined: undef_a,
    }
}

/// Author-file bipartite graph for one window.
#[derive(Debug, Clone, Default)]
pub struct BipartiteGraph {
    pub author_files: BTreeMap<AuthorId, BTreeSet<String>>,
    pub files: BTreeSet<String>,
}

impl BipartiteGraph {
    pub fn from_commits(commits: &[CommitRecord], window: Window, include_merges: bool) -> Self {
        let mut graph = BipartiteGraph::default();
        for commit in commits {
            if !window.contains(commit.timestamp) || (commit.is_merge && !include_merges) {
                continue;
            }
            let entry = graph
                .author_files
                .entry(commit.canonical_author.clone())
                .or_default();
            for change in &commit.file_changes {
                entry.insert(change.path.clone());
                graph.files.insert(change.path.clone());
            }
        }
        graph
    }

    pub fn is_empty(&self) -> bool {
        self.author_files.is_empty()
    }
}

/// One author-centrality algorithm over the bipartite commit graph.
/// Variants register by name and are selected at runtime.
pub trait CentralityMeasure: Send + Sync {
    fn name(&self) -> &'static str;
    /// Centrality of `author` in [0,1]; 0 when absent from the window.
    fn score(&self, graph: &BipartiteGraph, author: &AuthorId) -> f64;
}

/// Fraction of the window's files the author touched.
pub struct DegreeCentrality;

impl CentralityMeasure for DegreeCentrality {
    fn name(&self) -> &'static str {
        "degree"
    }

    fn score(&self, graph: &BipartiteGraph, author: &AuthorId) -> f64 {
        let total = graph.files.len();
        if total == 0 {
            return 0.0;
        }
        graph
            .author_files
            .get(author)
            .map(|files| files.len() as f64 / total as f64)
            .unwrap_or(0.0)
    }
}

/// Power-iteration eigenvector centrality on the bipartite adjacency,
/// normalized so the highest-scoring node is 1.
pub struct EigenvectorCentrality;

impl CentralityMeasure for EigenvectorCentrality {
    fn name(&self) -> &'static str {
        "eigenvector"
    }

    fn score(&self, graph: &BipartiteGraph, author: &AuthorId) -> f64 {
        if !graph.author_files.contains_key(author) {
            return 0.0;
        }
        let authors: Vec<&AuthorId> = graph.author_files.keys().collect();
        let files: Vec<&String> = graph.files.iter().collect();
        let file_index: BTreeMap<&String, usize> =
            files.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let mut author_scores = vec![1.0; authors.len()];
        let mut file_scores = vec![1.0; files.len()];
        for _ in 0..100 {
            let mut next_files = vec![0.0; files.len()];
            for (ai, a) in authors.iter().enumerate() {
                for f in &graph.author_files[*a] {
                    next_files[file_index[f]] += author_scores[ai];
                }
            }
            let mut next_authors = vec![0.0; authors.len()];
            for (ai, a) in authors.iter().enumerate() {
                for f in &graph.author_files[*a] {
                    next_authors[ai] += next_files[file_index[f]];
                }
            }
            let norm = next_authors
                .iter()
                .chain(next_files.iter())
                .fold(0.0f64, |m, v| m.max(*v));
            if norm == 0.0 {
                break;
            }
            let prev = author_scores.clone();
            author_scores = next_authors.iter().map(|v| v / norm).collect();
            file_scores = next_files.iter().map(|v| v / norm).collect();
            let _ = &file_scores;
            let moved: f64 = author_scores
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).abs())
                .sum();
            if moved < 1e-12 {
                break;
            }
        }
        let max = author_scores.iter().fold(0.0f64, |m, v| m.max(*v));
        if max == 0.0 {
            return 0.0;
        }
        let position = authors.iter().position(|a| *a == author).unwrap();
        author_scores[position] / max
    }
}

/// Looks up a centrality strategy by its registered name.
pub fn centrality_measure(name: &str) -> Result<Box<dyn CentralityMeasure>, IndicatorError> {
    match name {
        "degree" => Ok(Box::new(DegreeCentrality)),
        "eigenvector" => Ok(Box::new(EigenvectorCentrality)),
        other => Err(IndicatorError::UnknownMeasure(other.to_string())),
    }
}

pub const CENTRALITY_MEASURES: [&str; 2] = ["degree", "eigenvector"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralitySeries {
    pub author: AuthorId,
    pub measure: String,
    pub points: Vec<(Window, f64)>,
}

/// Sliding windows over the commit span, anchored at the first commit.
/// Windows with zero commits are skipped.
pub fn window_grid(
    start: chrono::DateTime<chrono::FixedOffset>,
    end: chrono::DateTime<chrono::FixedOffset>,
    window_days: i64,
    step_days: i64,
) -> Vec<Window> {
    let mut windows = Vec::new();
    if window_days <= 0 || step_days <= 0 {
        return windows;
    }
    let mut cursor = start;
    while cursor < end {
        let stop = cursor + Duration::days(window_days);
        windows.push(Window { start: cursor, end: stop });
        cursor += Duration::days(step_days);
    }
    windows
}

pub fn centrality_series(
    commits: &[CommitRecord],
    author: &AuthorId,
    window_days: i64,
    step_days: i64,
    measure: &dyn CentralityMeasure,
) -> CentralitySeries {
    let mut points = Vec::new();
    let span = commits
        .iter()
        .map(|c| c.timestamp)
        .fold(None::<(_, _)>, |acc, t| match acc {
            None => Some((t, t)),
            Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
        });
    if let Some((lo, hi)) = span {
        for window in window_grid(lo, hi + Duration::seconds(1), window_days, step_days) {
            let graph = BipartiteGraph::from_commits(commits, window, false);
            if graph.is_empty() {
                continue;
            }
            points.push((window, measure.score(&graph, author)));
        }
    }
    CentralitySeries {
        author: author.clone(),
        measure: measure.name().to_string(),
        points,
    }
}

/// Commit time-of-day profile with circular statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourProfile {
    pub author: AuthorId,
    pub histogram: [u64; 24],
    pub circular_mean_hour: f64,
    pub circular_std_hours: f64,
    /// Commits whose hour lies more than 2 circular standard deviations
    /// (arc distance) from the circular mean. Empty below 3 commits.
    pub anomalous_commits: Vec<(String, f64)>,
}

fn arc_distance_hours(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(24.0);
    d.min(24.0 - d)
}

/// Hours are taken in each commit's own recorded UTC offset.
pub fn hour_of_day_profile(commits: &[CommitRecord], author: &AuthorId) -> HourProfile {
    let mut histogram = [0u64; 24];
    let mut observations: Vec<(String, f64)> = Vec::new();
    for commit in commits {
        if &commit.canonical_author != author {
            continue;
        }
        let t = commit.timestamp;
        let hour = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0;
        histogram[t.hour() as usize % 24] += 1;
        observations.push((commit.commit_id.clone(), hour));
    }
    if observations.is_empty() {
        return HourProfile {
            author: author.clone(),
            histogram,
            circular_mean_hour: 0.0,
            circular_std_hours: 0.0,
            anomalous_commits: Vec::new(),
        };
    }
    let n = observations.len() as f64;
    let (sin_sum, cos_sum) = observations.iter().fold((0.0, 0.0), |(s, c), (_, h)| {
        let angle = h / 24.0 * 2.0 * PI;
        (s + angle.sin(), c + angle.cos())
    });
    let mean_angle = (sin_sum / n).atan2(cos_sum / n);
    let circular_mean_hour = (mean_angle / (2.0 * PI) * 24.0).rem_euclid(24.0);
    let resultant = ((sin_sum / n).powi(2) + (cos_sum / n).powi(2)).sqrt().min(1.0);
    let circular_std_hours = if resultant <= f64::EPSILON {
        // uniform spread: no meaningful deviation measure
        12.0
    } else {
        (-2.0 * resultant.ln()).sqrt() / (2.0 * PI) * 24.0
    };
    let anomalous_commits = if observations.len() < 3 {
        Vec::new()
    } else {
        observations
            .iter()
            .filter(|(_, h)| arc_distance_hours(*h, circular_mean_hour) > 2.0 * circular_std_hours)
            .cloned()
            .collect()
    };
    HourProfile {
        author: author.clone(),
        histogram,
        circular_mean_hour,
        circular_std_hours,
        anomalous_commits,
    }
}

/// Communication graph: authors as nodes, shared-thread participation as
/// edges weighted by message volume and mean sentiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommGraph {
    pub nodes: BTreeSet<AuthorId>,
    pub edges: Vec<CommEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommEdge {
    pub a1: AuthorId,
    pub a2: AuthorId,
    pub message_count: u64,
    pub mean_sentiment: f64,
}

pub fn communication_graph(
    messages: &[MessageRecord],
    lexicon: &Lexicon,
    window: Window,
) -> CommGraph {
    let mut nodes = BTreeSet::new();
    let mut by_thread: BTreeMap<&str, Vec<&MessageRecord>> = BTreeMap::new();
    for message in messages {
        if !window.contains(message.timestamp) {
            continue;
        }
        nodes.insert(message.canonical_author.clone());
        by_thread
            .entry(message.thread_id.as_str())
            .or_default()
            .push(message);
    }
    // edge accumulator: per pair, the set of shared-thread messages
    let mut per_pair: BTreeMap<AuthorPair, Vec<f64>> = BTreeMap::new();
    for thread in by_thread.values() {
        let participants: BTreeSet<&AuthorId> =
            thread.iter().map(|m| &m.canonical_author).collect();
        if participants.len() < 2 {
            continue;
        }
        let participants: Vec<&AuthorId> = participants.into_iter().collect();
        for i in 0..participants.len() {
            for j in (i + 1)..participants.len() {
                let pair =
                    AuthorPair::new(participants[i].clone(), participants[j].clone()).unwrap();
                let polarities = per_pair.entry(pair).or_default();
                for message in thread {
                    if &message.canonical_author == participants[i]
                        || &message.canonical_author == participants[j]
                    {
                        polarities.push(sentiment(&message.body, lexicon).0);
                    }
                }
            }
        }
    }
    let edges = per_pair
        .into_iter()
        .map(|(pair, polarities)| CommEdge {
            a1: pair.first().clone(),
            a2: pair.second().clone(),
            message_count: polarities.len() as u64,
            mean_sentiment: polarities.iter().sum::<f64>() / polarities.len().max(1) as f64,
        })
        .collect();
    CommGraph { nodes, edges }
}

/// Pearson correlation between two aligned indicator series.
pub fn correlate_series(x: &[f64], y: &[f64]) -> Result<f64, IndicatorError> {
    if x.len() != y.len() {
        return Err(IndicatorError::UndefinedCorrelation(
            "series lengths differ".into(),
        ));
    }
    if x.len() < 2 {
        return Err(IndicatorError::UndefinedCorrelation(
            "need at least 2 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(IndicatorError::UndefinedCorrelation(
            "zero variance".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FileChange, MessageSource};
    use chrono::DateTime;

    fn ts(s: &str) -> chrono::DateTime<chrono::FixedOffset> {
        DateTime::parse_from_rfc3339(s).unwrap()
    }

    fn window(from: &str, to: &str) -> Window {
        Window::new(ts(from), ts(to)).unwrap()
    }

    fn year() -> Window {
        window("2023-01-01T00:00:00+00:00", "2024-01-01T00:00:00+00:00")
    }

    fn commit(author: &str, when: &str, changes: Vec<FileChange>) -> CommitRecord {
        CommitRecord {
            commit_id: format!("{author}@{when}"),
            author_name: author.to_string(),
            author_email: format!("{author}@example.com"),
            canonical_author: AuthorId::new(author),
            timestamp: ts(when),
            is_merge: false,
            file_changes: changes,
        }
    }

    fn message(author: &str, thread: &str, when: &str, body: &str) -> MessageRecord {
        MessageRecord {
            message_id: format!("{author}-{thread}-{when}"),
            source: MessageSource::Issue,
            thread_id: thread.to_string(),
            in_reply_to: None,
            canonical_author: AuthorId::new(author),
            timestamp: ts(when),
            body: body.to_string(),
        }
    }

    #[test]
    fn change_stats_hand_case() {
        // (+10/-2), (+0/-5), (+3/-3)
        let commits = vec![commit(
            "a1",
            "2023-06-01T12:00:00+00:00",
            vec![
                FileChange::lines("f1", 10, 2),
                FileChange::lines("f2", 0, 5),
                FileChange::lines("f3", 3, 3),
            ],
        )];
        let stats = author_change_stats(&commits, &AuthorId::new("a1"), year(), false, true);
        assert_eq!(stats.total_file_changes, 3);
        assert!((stats.avg_additions - 13.0 / 3.0).abs() < 1e-9);
        assert!((stats.avg_deletions - 10.0 / 3.0).abs() < 1e-9);
        assert!((stats.avg_total - 23.0 / 3.0).abs() < 1e-9);
        assert!((stats.std_additions - 5.131601439446884).abs() < 1e-2);
        assert!((stats.avg_total - stats.avg_additions - stats.avg_deletions).abs() < 1e-9);
    }

    #[test]
    fn change_stats_empty_is_flagged_zero() {
        let stats = author_change_stats(&[], &AuthorId::new("a1"), year(), false, true);
        assert_eq!(stats.total_file_changes, 0);
        assert!(stats.std_undefined);
        assert_eq!(stats.avg_total, 0.0);
    }

    #[test]
    fn binary_changes_count_but_add_zero_lines() {
        let commits = vec![commit(
            "a1",
            "2023-06-01T12:00:00+00:00",
            vec![FileChange::lines("f1", 10, 0), FileChange::binary("b.bin")],
        )];
        let with = author_change_stats(&commits, &AuthorId::new("a1"), year(), false, true);
        assert_eq!(with.total_file_changes, 2);
        assert!((with.avg_additions - 5.0).abs() < 1e-9);
        let without = author_change_stats(&commits, &AuthorId::new("a1"), year(), false, false);
        assert_eq!(without.total_file_changes, 1);
    }

    #[test]
    fn degree_centrality_saturation_and_ratio() {
        let commits = vec![
            commit("a1", "2023-01-05T12:00:00+00:00", vec![FileChange::lines("f1", 1, 0)]),
        ];
        let graph = BipartiteGraph::from_commits(&commits, year(), false);
        assert_eq!(DegreeCentrality.score(&graph, &AuthorId::new("a1")), 1.0);

        let commits = vec![
            commit("a1", "2023-01-05T12:00:00+00:00", vec![
                FileChange::lines("f1", 1, 0),
                FileChange::lines("f2", 1, 0),
            ]),
            commit("a2", "2023-01-06T12:00:00+00:00", vec![FileChange::lines("f3", 1, 0)]),
        ];
        let graph = BipartiteGraph::from_commits(&commits, year(), false);
        let score = DegreeCentrality.score(&graph, &AuthorId::new("a1"));
        assert!((score - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn centrality_scale_free_under_duplication() {
        let commits = vec![
            commit("a1", "2023-01-05T12:00:00+00:00", vec![FileChange::lines("f1", 1, 0)]),
            commit("a2", "2023-01-06T12:00:00+00:00", vec![FileChange::lines("f2", 1, 0)]),
        ];
        let mut doubled = commits.clone();
        doubled.extend(commits.iter().cloned().map(|mut c| {
            c.commit_id.push('x');
            c
        }));
        let g1 = BipartiteGraph::from_commits(&commits, year(), false);
        let g2 = BipartiteGraph::from_commits(&doubled, year(), false);
        for author in ["a1", "a2"] {
            let id = AuthorId::new(author);
            assert_eq!(
                DegreeCentrality.score(&g1, &id),
                DegreeCentrality.score(&g2, &id)
            );
        }
    }

    #[test]
    fn eigenvector_measure_registered_and_bounded() {
        let measure = centrality_measure("eigenvector").unwrap();
        let commits = vec![
            commit("a1", "2023-01-05T12:00:00+00:00", vec![
                FileChange::lines("f1", 1, 0),
                FileChange::lines("f2", 1, 0),
            ]),
            commit("a2", "2023-01-06T12:00:00+00:00", vec![FileChange::lines("f2", 1, 0)]),
        ];
        let graph = BipartiteGraph::from_commits(&commits, year(), false);
        let s1 = measure.score(&graph, &AuthorId::new("a1"));
        let s2 = measure.score(&graph, &AuthorId::new("a2"));
        assert!((0.0..=1.0).contains(&s1) && (0.0..=1.0).contains(&s2));
        assert!(s1 >= s2);
        assert!(centrality_measure("bogus").is_err());
    }

    #[test]
    fn circular_mean_symmetric() {
        let commits: Vec<CommitRecord> = [10, 11, 12]
            .iter()
            .map(|h| commit("a1", &format!("2023-01-05T{h:02}:00:00+00:00"), vec![]))
            .collect();
        let profile = hour_of_day_profile(&commits, &AuthorId::new("a1"));
        assert!((profile.circular_mean_hour - 11.0).abs() < 1e-9);
    }

    #[test]
    fn circular_mean_wraps_midnight() {
        let commits: Vec<CommitRecord> = ["2023-01-04T23:00:00+00:00", "2023-01-05T00:00:00+00:00", "2023-01-05T01:00:00+00:00"]
            .iter()
            .map(|t| commit("a1", t, vec![]))
            .collect();
        let profile = hour_of_day_profile(&commits, &AuthorId::new("a1"));
        let wrapped = profile.circular_mean_hour.min(24.0 - profile.circular_mean_hour);
        assert!(wrapped < 1e-9, "mean {}", profile.circular_mean_hour);
    }

    #[test]
    fn outlier_hour_flagged() {
        let mut commits: Vec<CommitRecord> = [10, 10, 11, 11, 12, 12]
            .iter()
            .enumerate()
            .map(|(i, h)| commit("a1", &format!("2023-01-{:02}T{h:02}:00:00+00:00", i + 1), vec![]))
            .collect();
        commits.push(commit("a1", "2023-01-20T03:00:00+00:00", vec![]));
        let profile = hour_of_day_profile(&commits, &AuthorId::new("a1"));
        assert_eq!(profile.anomalous_commits.len(), 1);
        assert!((profile.anomalous_commits[0].1 - 3.0).abs() < 1e-9);
    }

    #[test]
    fn hour_uses_recorded_offset() {
        let commits = vec![commit("a1", "2023-01-05T23:30:00+08:00", vec![])];
        let profile = hour_of_day_profile(&commits, &AuthorId::new("a1"));
        assert_eq!(profile.histogram[23], 1);
    }

    #[test]
    fn too_few_commits_no_anomalies() {
        let commits = vec![
            commit("a1", "2023-01-05T10:00:00+00:00", vec![]),
            commit("a1", "2023-01-06T22:00:00+00:00", vec![]),
        ];
        let profile = hour_of_day_profile(&commits, &AuthorId::new("a1"));
        assert!(profile.anomalous_commits.is_empty());
    }

    #[test]
    fn comm_graph_edge_sentiment() {
        let lexicon = crate::textmetrics::Lexicon::from_entries([
            ("good".to_string(), 0.2, 0.5),
            ("terrible".to_string(), -0.6, 0.5),
        ]);
        let messages = vec![
            message("a1", "t1", "2023-01-05T10:00:00+00:00", "good"),
            message("a2", "t1", "2023-01-05T11:00:00+00:00", "terrible"),
        ];
        let graph = communication_graph(&messages, &lexicon, year());
        assert_eq!(graph.edges.len(), 1);
        assert_eq!(graph.edges[0].message_count, 2);
        assert!((graph.edges[0].mean_sentiment + 0.2).abs() < 1e-12);
    }

    #[test]
    fn lone_thread_author_is_node_only() {
        let lexicon = crate::textmetrics::Lexicon::builtin();
        let messages = vec![
            message("a1", "t1", "2023-01-05T10:00:00+00:00", "solo"),
            message("a2", "t2", "2023-01-05T11:00:00+00:00", "also solo"),
        ];
        let graph = communication_graph(&messages, &lexicon, year());
        assert_eq!(graph.nodes.len(), 2);
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn pearson_hand_case() {
        let r = correlate_series(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9820).abs() < 1e-3);
    }

    #[test]
    fn pearson_identity_and_negation() {
        let x = [1.0, 2.0, 5.0, 3.0];
        assert!((correlate_series(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((correlate_series(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(correlate_series(&[1.0], &[1.0]).is_err());
        assert!(correlate_series(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn pearson_affine_invariant(
            xs in proptest::collection::vec(-100.0..100.0f64, 3..20),
            scale in 0.1..10.0f64,
            shift in -50.0..50.0f64,
        ) {
            let ys: Vec<f64> = xs.iter().map(|v| v * 2.0 + 1.0).collect();
            if correlate_series(&xs, &ys).is_ok() {
                let scaled: Vec<f64> = xs.iter().map(|v| v * scale + shift).collect();
                let r1 = correlate_series(&xs, &ys).unwrap();
                let r2 = correlate_series(&scaled, &ys).unwrap();
                proptest::prop_assert!((r1 - r2).abs() < 1e-9);
            }
        }

        #[test]
        fn comm_edge_sentiment_in_range(bodies in proptest::collection::vec(".{0,60}", 2..6)) {
            let lexicon = crate::textmetrics::Lexicon::builtin();
            let messages: Vec<MessageRecord> = bodies.iter().enumerate().map(|(i, b)| {
                message(if i % 2 == 0 { "a1" } else { "a2" }, "t1",
                        "2023-01-05T10:00:00+00:00", b)
            }).collect();
            let graph = communication_graph(&messages, &lexicon, year());
            for edge in &graph.edges {
                proptest::prop_assert!((-1.0..=1.0).contains(&edge.mean_sentiment));
            }
        }
    }
}
