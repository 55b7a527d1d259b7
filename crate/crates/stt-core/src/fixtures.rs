//! Synthetic project histories: seeded benign generation plus labeled
//! attack-campaign injection (long-con, escalation, backdoor stages).

use chrono::{DateTime, Duration, FixedOffset};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::ingest::{AuthorId, CommitRecord, FileChange, MessageRecord, MessageSource};
use crate::topology::Window;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Shape of a generated benign history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_authors: usize,
    pub n_files: usize,
    pub n_months: usize,
    /// Mean commits per author per month (Poisson-like, clamped to
    /// [rate/2, 3*rate/2] so totals stay within a documented band).
    pub commits_per_author_month: f64,
    /// Commit hours land in `[start, end)` on the 24h circle.
    pub active_hours: (u32, u32),
    pub message_rate: f64,
    pub benign_sentiment_mean: f64,
    pub dependency_density: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            n_authors: 20,
            n_files: 40,
            n_months: 12,
            commits_per_author_month: 4.0,
            active_hours: (9, 17),
            message_rate: 3.0,
            benign_sentiment_mean: 0.3,
            dependency_density: 0.05,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), FixtureError> {
        if self.n_authors < 1 || self.n_files < 1 || self.n_months < 1 {
            return Err(FixtureError::Argument(
                "author, file, and month counts must be at least 1".into(),
            ));
        }
        if self.commits_per_author_month < 0.0 || self.message_rate < 0.0 {
            return Err(FixtureError::Argument("rates must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.dependency_density) {
            return Err(FixtureError::Argument(
                "dependency_density must lie in [0, 1]".into(),
            ));
        }
        if self.active_hours.0 >= 24 || self.active_hours.1 > 24 {
            return Err(FixtureError::Argument(
                "active_hours must lie on the 24h circle".into(),
            ));
        }
        Ok(())
    }
}

/// A generated corpus in the ingest module's record model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub commits: Vec<CommitRecord>,
    pub messages: Vec<MessageRecord>,
    pub dependency_edges: BTreeSet<(String, String)>,
}

/// Attack campaign stages, in chronological order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Stage {
    Lc,
    Ec,
    Bd,
}

/// Labels describing an injected campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub attacker: AuthorId,
    pub stage_windows: BTreeMap<Stage, Window>,
    pub backdoor_file: String,
    pub sock_puppets: BTreeSet<AuthorId>,
}

/// Knobs for `inject_attack`. Stage durations are in months counted back
/// from the end of the benign timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionParams {
    pub attacker: String,
    pub sock_puppets: usize,
    pub lc_months: usize,
    pub ec_months: usize,
    pub bd_months: usize,
    pub messages_per_puppet_month: usize,
    pub backdoor_file: String,
    pub build_script: String,
}

impl Default for InjectionParams {
    fn default() -> Self {
        InjectionParams {
            attacker: "newcomer".into(),
            sock_puppets: 2,
            lc_months: 6,
            ec_months: 2,
            bd_months: 1,
            messages_per_puppet_month: 10,
            backdoor_file: "tests/files/crafted-input.bin".into(),
            build_script: "build-aux/pretarball.m4".into(),
        }
    }
}

pub const TIMELINE_START: &str = "2023-01-01T00:00:00+00:00";
/// Months are fixed 30-day blocks so windows tile exactly.
pub const MONTH_DAYS: i64 = 30;

pub fn timeline_start() -> DateTime<FixedOffset> {
    DateTime::parse_from_rfc3339(TIMELINE_START).unwrap()
}

pub fn month_window(index: usize) -> Window {
    let start = timeline_start() + Duration::days(MONTH_DAYS * index as i64);
    Window::new(start, start + Duration::days(MONTH_DAYS)).unwrap()
}

fn author_name(i: usize) -> String {
    format!("author{i:02}")
}

fn file_path(i: usize) -> String {
    format!("src/file{i:03}.c")
}

fn commit_id(rng: &mut ChaCha8Rng) -> String {
    (0..40)
        .map(|_| char::from_digit(rng.gen_range(0..16), 16).unwrap())
        .collect()
}

/// Hour within `[start, end)` on the circle, with minute jitter.
fn draw_timestamp(
    rng: &mut ChaCha8Rng,
    window: Window,
    active_hours: (u32, u32),
) -> DateTime<FixedOffset> {
    let day = rng.gen_range(0..MONTH_DAYS);
    let span = (24 + active_hours.1 as i64 - active_hours.0 as i64) % 24;
    let span = if span == 0 { 24 } else { span };
    let hour = (active_hours.0 as i64 + rng.gen_range(0..span)) % 24;
    let minute = rng.gen_range(0..60);
    window.start + Duration::days(day) + Duration::hours(hour) + Duration::minutes(minute)
}

const POSITIVE_WORDS: [&str; 4] = ["thanks", "great", "good", "helpful"];
const NEGATIVE_WORDS: [&str; 4] = ["slow", "broken", "stalled", "frustrating"];
const FILLER: [&str; 6] = ["the", "patch", "builds", "on", "my", "machine"];

fn benign_body(rng: &mut ChaCha8Rng, sentiment_mean: f64) -> String {
    let mut words: Vec<&str> = Vec::new();
    for _ in 0..rng.gen_range(4..10) {
        words.push(FILLER[rng.gen_range(0..FILLER.len())]);
    }
    // one evaluative word, positive with probability mapped from the mean
    let p_positive = ((sentiment_mean + 1.0) / 2.0).clamp(0.0, 1.0);
    if rng.gen_bool(p_positive) {
        words.push(POSITIVE_WORDS[rng.gen_range(0..POSITIVE_WORDS.len())]);
    } else {
        words.push(NEGATIVE_WORDS[rng.gen_range(0..NEGATIVE_WORDS.len())]);
    }
    let mut body = words.join(" ");
    body.push('.');
    body
}

fn make_commit(
    rng: &mut ChaCha8Rng,
    author: &str,
    timestamp: DateTime<FixedOffset>,
    file_changes: Vec<FileChange>,
) -> CommitRecord {
    CommitRecord {
        commit_id: commit_id(rng),
        author_name: author.to_string(),
        author_email: format!("{author}@example.org"),
        canonical_author: AuthorId::new(author),
        timestamp,
        is_merge: false,
        file_changes,
    }
}

fn make_message(
    id: String,
    author: &str,
    thread_id: String,
    timestamp: DateTime<FixedOffset>,
    body: String,
) -> MessageRecord {
    MessageRecord {
        message_id: id,
        source: MessageSource::MailingList,
        thread_id,
        in_reply_to: None,
        canonical_author: AuthorId::new(author),
        timestamp,
        body,
    }
}

/// Generates a benign history: clamped-Poisson commit counts, log-normal
/// change sizes, active-window commit hours, shared monthly message
/// threads, and density-sampled dependency edges. Deterministic per seed.
pub fn generate_benign_history(config: &ScenarioConfig) -> Result<History, FixtureError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut commits = Vec::new();
    let mut messages = Vec::new();

    let size_dist = LogNormal::new(3.0, 1.0).map_err(|e| FixtureError::Argument(e.to_string()))?;
    let rate = config.commits_per_author_month;
    let (lo, hi) = (
        (rate / 2.0).floor().max(0.0) as u64,
        (rate * 1.5).ceil() as u64,
    );

    for month in 0..config.n_months {
        let window = month_window(month);
        let n_threads = (config.n_authors / 2).max(2);
        for author_idx in 0..config.n_authors {
            let author = author_name(author_idx);

            let n_commits = if rate > 0.0 {
                let draw = Poisson::new(rate).unwrap().sample(&mut rng) as u64;
                draw.clamp(lo, hi)
            } else {
                0
            };
            for _ in 0..n_commits {
                let n_changes = rng.gen_range(1..=3.min(config.n_files));
                let mut paths = BTreeSet::new();
                while paths.len() < n_changes {
                    paths.insert(file_path(rng.gen_range(0..config.n_files)));
                }
                let file_changes = paths
                    .into_iter()
                    .map(|path| {
                        let draw: f64 = size_dist.sample(&mut rng);
                        let additions = draw.round().max(1.0) as u64;
                        let deletions = (additions as f64 * rng.gen_range(0.0..0.8)) as u64;
                        FileChange::lines(&path, additions, deletions)
                    })
                    .collect();
                let timestamp = draw_timestamp(&mut rng, window, config.active_hours);
                commits.push(make_commit(&mut rng, &author, timestamp, file_changes));
            }

            let n_messages = if config.message_rate > 0.0 {
                Poisson::new(config.message_rate).unwrap().sample(&mut rng) as u64
            } else {
                0
            };
            for m in 0..n_messages {
                let thread = format!("thread-{month:02}-{:02}", rng.gen_range(0..n_threads));
                let timestamp = draw_timestamp(&mut rng, window, config.active_hours);
                messages.push(make_message(
                    format!("msg-{month:02}-{author}-{m}"),
                    &author,
                    thread,
                    timestamp,
                    benign_body(&mut rng, config.benign_sentiment_mean),
                ));
            }
        }
    }

    let mut dependency_edges = BTreeSet::new();
    for i in 0..config.n_files {
        for j in 0..config.n_files {
            if i != j && rng.gen_bool(config.dependency_density) {
                dependency_edges.insert((file_path(i), file_path(j)));
            }
        }
    }

    commits.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.commit_id.cmp(&b.commit_id)));
    messages.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.message_id.cmp(&b.message_id)));
    Ok(History {
        commits,
        messages,
        dependency_edges,
    })
}

/// Appends an attack campaign to a benign history. The benign records are
/// never modified; everything new is appended. Stage months count back
/// from the end of the timeline: long-con first, then escalation, then
/// the backdoor month(s).
pub fn inject_attack(
    history: &History,
    config: &ScenarioConfig,
    params: &InjectionParams,
    seed: u64,
) -> Result<(History, GroundTruth), FixtureError> {
    let attacker = AuthorId::new(&params.attacker);
    let benign_authors: BTreeSet<&AuthorId> =
        history.commits.iter().map(|c| &c.canonical_author).collect();
    if benign_authors.contains(&attacker) {
        return Err(FixtureError::Argument(format!(
            "attacker id {attacker} collides with a benign author"
        )));
    }
    let total = params.lc_months + params.ec_months + params.bd_months;
    if total == 0 {
        return Ok((
            history.clone(),
            GroundTruth {
                attacker,
                stage_windows: BTreeMap::new(),
                backdoor_file: params.backdoor_file.clone(),
                sock_puppets: BTreeSet::new(),
            },
        ));
    }
    if total > config.n_months {
        return Err(FixtureError::Argument(format!(
            "stage months ({total}) exceed the timeline ({})",
            config.n_months
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5EED);
    let mut out = history.clone();
    let maintainer = author_name(0);
    let lc_start = config.n_months - total;
    let ec_start = lc_start + params.lc_months;
    let bd_start = ec_start + params.ec_months;

    let span_window = |a: usize, b: usize| -> Option<Window> {
        if a == b {
            return None;
        }
        Some(Window::new(month_window(a).start, month_window(b - 1).end).unwrap())
    };
    let mut stage_windows = BTreeMap::new();
    if let Some(w) = span_window(lc_start, ec_start) {
        stage_windows.insert(Stage::Lc, w);
    }
    if let Some(w) = span_window(ec_start, bd_start) {
        stage_windows.insert(Stage::Ec, w);
    }
    if let Some(w) = span_window(bd_start, config.n_months) {
        stage_windows.insert(Stage::Bd, w);
    }

    let lc_hours = (9u32, 17u32);
    let core_files: Vec<String> = (0..config.n_files.min(3)).map(file_path).collect();

    // Long-con: small patches at plausible hours, plus polite posts in
    // whatever threads the lead maintainer is active in.
    for month in lc_start..ec_start {
        let window = month_window(month);
        for c in 0..3 {
            let path = file_path(rng.gen_range(0..config.n_files));
            let additions = rng.gen_range(2..15);
            let deletions = rng.gen_range(0..3);
            let timestamp = draw_timestamp(&mut rng, window, lc_hours);
            let _ = c;
            out.commits.push(make_commit(
                &mut rng,
                &params.attacker,
                timestamp,
                vec![FileChange::lines(&path, additions, deletions)],
            ));
        }
        let thread = maintainer_thread(history, &maintainer, month, &mut out, &mut rng);
        for m in 0..2 {
            let timestamp = draw_timestamp(&mut rng, window, lc_hours);
            out.messages.push(make_message(
                format!("lc-{month:02}-{m}"),
                &params.attacker,
                thread.clone(),
                timestamp,
                "thanks the patch is great and helpful.".into(),
            ));
        }
    }

    // Escalation: sock puppets flood the maintainer's threads with
    // negative-sentiment pressure while the attacker's line influence on
    // core files grows month over month.
    let mut sock_puppets = BTreeSet::new();
    for month in ec_start..bd_start {
        let window = month_window(month);
        let thread = maintainer_thread(history, &maintainer, month, &mut out, &mut rng);
        for p in 0..params.sock_puppets {
            let puppet = format!("puppet{p:02}");
            sock_puppets.insert(AuthorId::new(&puppet));
            for m in 0..params.messages_per_puppet_month {
                let timestamp = draw_timestamp(&mut rng, window, (0, 24));
                out.messages.push(make_message(
                    format!("ec-{month:02}-{p}-{m}"),
                    &puppet,
                    thread.clone(),
                    timestamp,
                    "the release is slow the queue is stalled and review is broken.".into(),
                ));
            }
        }
        let growth = (month - ec_start + 1) as u64;
        for path in &core_files {
            let timestamp = draw_timestamp(&mut rng, window, lc_hours);
            out.commits.push(make_commit(
                &mut rng,
                &params.attacker,
                timestamp,
                vec![FileChange::lines(path, 60 * growth, 10 * growth)],
            ));
        }
    }

    // Backdoor: a new binary test input committed repeatedly plus one
    // large build-script change, at hours far outside the long-con
    // profile, with a dependency edge tying the build script to the blob.
    for month in bd_start..config.n_months {
        let window = month_window(month);
        let thread = maintainer_thread(history, &maintainer, month, &mut out, &mut rng);
        for c in 0..6 {
            let timestamp = draw_timestamp(&mut rng, window, (1, 4));
            let mut changes = vec![FileChange::binary(&params.backdoor_file)];
            if c == 0 {
                changes.push(FileChange::lines(&params.build_script, 2000, 5));
            }
            out.commits.push(make_commit(&mut rng, &params.attacker, timestamp, changes));
        }
        for m in 0..30 {
            let timestamp = draw_timestamp(&mut rng, window, (1, 4));
            out.messages.push(make_message(
                format!("bd-{month:02}-{m}"),
                &params.attacker,
                thread.clone(),
                timestamp,
                "the delay is frustrating please merge now the build is broken without it.".into(),
            ));
        }
    }
    out.dependency_edges
        .insert((params.build_script.clone(), params.backdoor_file.clone()));
    // the generated build system feeds the core sources, so everything
    // downstream of the build script is reachable from the blob
    for path in &core_files {
        out.dependency_edges
            .insert((path.clone(), params.build_script.clone()));
    }

    out.commits.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.commit_id.cmp(&b.commit_id)));
    out.messages.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.message_id.cmp(&b.message_id)));

    Ok((
        out,
        GroundTruth {
            attacker,
            stage_windows,
            backdoor_file: params.backdoor_file.clone(),
            sock_puppets,
        },
    ))
}

/// Picks a thread the maintainer already posts in during `month`; if there
/// is none, appends a fresh maintainer message so the thread exists.
fn maintainer_thread(
    benign: &History,
    maintainer: &str,
    month: usize,
    out: &mut History,
    rng: &mut ChaCha8Rng,
) -> String {
    let window = month_window(month);
    let maintainer_id = AuthorId::new(maintainer);
    if let Some(message) = benign
        .messages
        .iter()
        .find(|m| m.canonical_author == maintainer_id && window.contains(m.timestamp))
    {
        return message.thread_id.clone();
    }
    let thread = format!("thread-{month:02}-fresh");
    let timestamp = draw_timestamp(rng, window, (9, 17));
    out.messages.push(make_message(
        format!("fresh-{month:02}"),
        maintainer,
        thread.clone(),
        timestamp,
        "status update on the release.".into(),
    ));
    thread
}
