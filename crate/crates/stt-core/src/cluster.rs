//! Stylometric clustering: standardized writing-feature vectors grouped
//! with seeded k-means to detect multiple writers behind one account.

use chrono::{DateTime, FixedOffset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{AuthorId, MessageRecord};
use crate::textmetrics::{style_features, Lexicon, StyleFeatures};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("undefined silhouette score: {0}")]
    UndefinedScore(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Point = Vec<f64>;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn nearest_centroid(point: &[f64], centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn kmeans_plus_plus_seeds(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centroids: Vec<Point> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    while centroids.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| nearest_centroid(p, &centroids).1)
            .collect();
        let total: f64 = weights.iter().sum();
        let chosen = if total <= 0.0 {
            // all remaining mass at existing centroids; pick uniformly
            rng.gen_range(0..points.len())
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut index = points.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    index = i;
                    break;
                }
                target -= w;
            }
            index
        };
        centroids.push(points[chosen].clone());
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding. Deterministic for fixed
/// inputs and seed; empty clusters are re-seeded from the farthest point.
pub fn kmeans_fit(
    points: &[Point],
    k: usize,
    seed: u64,
    max_iters: usize,
    tolerance: f64,
) -> Result<(Vec<usize>, Vec<Point>, f64), ClusterError> {
    if k == 0 {
        return Err(ClusterError::Argument("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(ClusterError::Argument(format!(
            "k={k} exceeds {} points",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus_seeds(points, k, &mut rng);
    let dims = points[0].len();
    let mut assignments = vec![0usize; points.len()];

    for _ in 0..max_iters.max(1) {
        for (i, p) in points.iter().enumerate() {
            assignments[i] = nearest_centroid(p, &centroids).0;
        }
        let mut sums = vec![vec![0.0; dims]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        // re-seed empty clusters from the point farthest from its centroid
        for cluster in 0..k {
            if counts[cluster] > 0 {
                continue;
            }
            let farthest = points
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| {
                    let da = nearest_centroid(a, &centroids).1;
                    let db = nearest_centroid(b, &centroids).1;
                    da.partial_cmp(&db).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            sums[cluster] = points[farthest].clone();
            counts[cluster] = 1;
        }
        let mut movement = 0.0f64;
        for cluster in 0..k {
            let next: Point = sums[cluster]
                .iter()
                .map(|s| s / counts[cluster] as f64)
                .collect();
            movement = movement.max(distance(&next, &centroids[cluster]));
            centroids[cluster] = next;
        }
        if movement < tolerance {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        assignments[i] = nearest_centroid(p, &centroids).0;
    }
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum();
    Ok((assignments, centroids, inertia))
}

/// Best-of-restarts fit: runs `restarts` seeded fits and keeps the lowest
/// inertia, ties broken by restart index for determinism.
pub fn kmeans_best_of(
    points: &[Point],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<(Vec<usize>, Vec<Point>, f64), ClusterError> {
    let mut best: Option<(Vec<usize>, Vec<Point>, f64)> = None;
    for restart in 0..restarts.max(1) {
        let run = kmeans_fit(points, k, seed.wrapping_add(restart as u64), 300, 1e-9)?;
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Mean silhouette over all points, Euclidean metric.
pub fn silhouette_score(points: &[Point], assignments: &[usize]) -> Result<f64, ClusterError> {
    if points.len() != assignments.len() {
        return Err(ClusterError::Argument("length mismatch".into()));
    }
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut cluster_sizes = vec![0usize; k];
    for &a in assignments {
        cluster_sizes[a] += 1;
    }
    if k < 2 || cluster_sizes.contains(&0) {
        return Err(ClusterError::UndefinedScore(
            "need at least 2 non-empty clusters".into(),
        ));
    }
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let own = assignments[i];
        let mut dist_sums = vec![0.0f64; k];
        for (j, q) in points.iter().enumerate() {
            if i != j {
                dist_sums[assignments[j]] += distance(p, q);
            }
        }
        let a = if cluster_sizes[own] > 1 {
            dist_sums[own] / (cluster_sizes[own] - 1) as f64
        } else {
            // singleton: silhouette defined as 0
            total += 0.0;
            continue;
        };
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| dist_sums[c] / cluster_sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    Ok(total / points.len() as f64)
}

/// Messages in timestamp order with their standardized feature rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub message_ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Point>,
    /// Zero-variance columns dropped during standardization.
    pub dropped_columns: Vec<String>,
}

/// Z-score standardizes columns; zero-variance columns are dropped and recorded.
pub fn standardize(raw: &[Point], columns: &[String]) -> (Vec<Point>, Vec<String>, Vec<String>) {
    let dims = columns.len();
    let n = raw.len() as f64;
    let mut kept_columns = Vec::new();
    let mut dropped = Vec::new();
    let mut kept_stats = Vec::new();
    for d in 0..dims {
        let mean = raw.iter().map(|r| r[d]).sum::<f64>() / n;
        let variance = raw.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        if variance <= 1e-24 {
            dropped.push(columns[d].clone());
        } else {
            kept_columns.push(columns[d].clone());
            kept_stats.push((d, mean, variance.sqrt()));
        }
    }
    let rows = raw
        .iter()
        .map(|r| {
            kept_stats
                .iter()
                .map(|(d, mean, std)| (r[*d] - mean) / std)
                .collect()
        })
        .collect();
    (rows, kept_columns, dropped)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub message_id: String,
    pub timestamp: DateTime<FixedOffset>,
    pub label: usize,
    pub polarity: f64,
}

/// Clustering outcome for one account.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub account: AuthorId,
    pub k_evaluated: Vec<(usize, f64)>,
    pub chosen_k: usize,
    pub assignments: Vec<usize>,
    /// Centroids in the standardized feature space.
    pub centroids: Vec<Point>,
    pub timeline: Vec<TimelineEntry>,
    pub dropped_columns: Vec<String>,
    /// Set when the best silhouette is below 0.25.
    pub weak_separation: bool,
}

const WEAK_SEPARATION_FLOOR: f64 = 0.25;
const RESTARTS: usize = 10;

/// Clusters the account's message styles across `k_range`, choosing the k
/// with the best silhouette.
pub fn account_style_clusters(
    messages: &[MessageRecord],
    account: &AuthorId,
    lexicon: &Lexicon,
    k_range: &[usize],
    seed: u64,
) -> Result<ClusterReport, ClusterError> {
    let mut own: Vec<&MessageRecord> = messages
        .iter()
        .filter(|m| &m.canonical_author == account)
        .collect();
    own.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.message_id.cmp(&b.message_id)));

    let mut kept: Vec<&MessageRecord> = Vec::new();
    let mut raw: Vec<Point> = Vec::new();
    let mut features: Vec<StyleFeatures> = Vec::new();
    for message in own {
        let f = style_features(&message.body, lexicon);
        if f.degenerate {
            continue;
        }
        raw.push(f.as_vector().to_vec());
        features.push(f);
        kept.push(message);
    }
    if kept.len() < 4 {
        return Err(ClusterError::InsufficientData(format!(
            "account {account} has {} non-degenerate messages, need at least 4",
            kept.len()
        )));
    }
    let columns: Vec<String> = StyleFeatures::FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect();
    let (rows, _kept_columns, dropped_columns) = standardize(&raw, &columns);

    let mut k_evaluated = Vec::new();
    let mut best: Option<(usize, f64, Vec<usize>, Vec<Point>)> = None;
    for &k in k_range {
        if !(2..=6).contains(&k) || k > rows.len() {
            continue;
        }
        let (assignments, centroids, _) = kmeans_best_of(&rows, k, seed, RESTARTS)?;
        let score = silhouette_score(&rows, &assignments).unwrap_or(-1.0);
        k_evaluated.push((k, score));
        if best.as_ref().is_none_or(|(_, s, _, _)| score > *s) {
            best = Some((k, score, assignments, centroids));
        }
    }
    let (chosen_k, best_score, assignments, centroids) = best.ok_or_else(|| {
        ClusterError::Argument("k_range contained no usable k in [2,6]".into())
    })?;

    let timeline = kept
        .iter()
        .zip(&assignments)
        .zip(&features)
        .map(|((message, &label), f)| TimelineEntry {
            message_id: message.message_id.clone(),
            timestamp: message.timestamp,
            label,
            polarity: f.polarity,
        })
        .collect();

    Ok(ClusterReport {
        account: account.clone(),
        k_evaluated,
        chosen_k,
        assignments,
        centroids,
        timeline,
        dropped_columns,
        weak_separation: best_score < WEAK_SEPARATION_FLOOR,
    })
}
