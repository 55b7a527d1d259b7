//! `stt` — socio-technical topology analysis pipeline.
//!
//! One subcommand per pipeline stage; intermediates are plain files so
//! stages can be cached and re-run independently.

use chrono::{DateTime, Duration, FixedOffset};
use clap::{Parser, Subcommand};
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use stt_cli::manifest::RunManifest;
use stt_cli::render::{Document, Format};
use stt_core::cluster::account_style_clusters;
use stt_core::fixtures::{generate_benign_history, inject_attack, InjectionParams, ScenarioConfig};
use stt_core::indicators::{
    author_change_stats, centrality_measure, centrality_series, communication_graph,
    hour_of_day_profile,
};
use stt_core::ingest::{
    parse_issues_json, parse_mbox, parse_numstat_log, read_jsonl, write_jsonl, AliasMap, AuthorId,
    CommitRecord, MessageRecord,
};
use stt_core::mapek::{run_detection, AnalyzerRegistry, LoopConfig};
use stt_core::textmetrics::Lexicon;
use stt_core::topology::{
    build_snapshot, parse_dependency_edges, Snapshot, SnapshotConfig, Window,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

impl CliError {
    /// Exit codes are enumerated per error class: 2 usage, 3 format,
    /// 4 i/o, 5 config. 0 is reserved for zero-diagnostic success.
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Format(_) => 3,
            CliError::Io(_) => 4,
            CliError::Config(_) => 5,
        }
    }
}

#[derive(Parser)]
#[command(name = "stt", version, about = "Socio-technical topology analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw corpus (git numstat log, mbox archive, or issues JSON)
    /// into canonical JSONL records.
    Ingest {
        /// Input kind: numstat | mbox | issues
        #[arg(long)]
        kind: String,
        input: PathBuf,
        #[arg(long)]
        alias_map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one topology snapshot over a window.
    Snapshot {
        #[arg(long)]
        commits: PathBuf,
        #[arg(long)]
        messages: Option<PathBuf>,
        #[arg(long)]
        deps: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-author indicators: change statistics, centrality series,
    /// commit-hour profile, or the communication graph.
    Indicators {
        #[arg(long)]
        commits: Option<PathBuf>,
        #[arg(long)]
        messages: Option<PathBuf>,
        /// stats | centrality | hours | comm
        #[arg(long, default_value = "stats")]
        kind: String,
        #[arg(long)]
        author: Option<String>,
        /// Centrality measure name (degree | eigenvector)
        #[arg(long, default_value = "degree")]
        measure: String,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long, default_value_t = 30)]
        window: i64,
        #[arg(long, default_value_t = 30)]
        step: i64,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster one account's writing style across its messages.
    Cluster {
        #[arg(long)]
        messages: PathBuf,
        #[arg(long)]
        author: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Inclusive k range, e.g. 2..6
        #[arg(long, default_value = "2..6")]
        k: String,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full detection loop over a windowed snapshot series.
    Detect {
        #[arg(long)]
        commits: PathBuf,
        #[arg(long)]
        messages: Option<PathBuf>,
        #[arg(long)]
        deps: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 30)]
        window: i64,
        #[arg(long, default_value_t = 30)]
        step: i64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a previously produced JSON document as csv, json, or svg.
    Report {
        input: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic history, optionally with an injected campaign.
    GenFixture {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        inject: bool,
        #[arg(long, default_value_t = 20)]
        n_authors: usize,
        #[arg(long, default_value_t = 40)]
        n_files: usize,
        #[arg(long, default_value_t = 12)]
        n_months: usize,
        #[arg(long, default_value_t = 4.0)]
        rate: f64,
    },
}

fn parse_instant(text: &str) -> Result<DateTime<FixedOffset>, CliError> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t);
    }
    DateTime::parse_from_rfc3339(&format!("{text}T00:00:00+00:00"))
        .map_err(|_| CliError::Usage(format!("cannot parse date `{text}` (use ISO dates)")))
}

fn parse_window(from: &str, to: &str) -> Result<Window, CliError> {
    let window = Window::new(parse_instant(from)?, parse_instant(to)?);
    window.map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_k_range(text: &str) -> Result<Vec<usize>, CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Usage(format!("k range `{text}` is not of the form 2..6")))?;
    let lo: usize = lo.trim().parse().map_err(|_| CliError::Usage("bad k range".into()))?;
    let hi: usize = hi.trim().parse().map_err(|_| CliError::Usage("bad k range".into()))?;
    if lo < 2 || hi < lo {
        return Err(CliError::Usage(format!("k range `{text}` must satisfy 2 <= lo <= hi")));
    }
    Ok((lo..=hi).collect())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    Ok(BufReader::new(File::open(path)?))
}

fn load_commits(path: &Path) -> Result<Vec<CommitRecord>, CliError> {
    read_jsonl(open(path)?).map_err(|e| CliError::Format(e.to_string()))
}

fn load_messages(path: Option<&PathBuf>) -> Result<Vec<MessageRecord>, CliError> {
    match path {
        Some(path) => read_jsonl(open(path)?).map_err(|e| CliError::Format(e.to_string())),
        None => Ok(Vec::new()),
    }
}

fn load_deps(path: Option<&PathBuf>) -> Result<BTreeSet<(String, String)>, CliError> {
    match path {
        Some(path) => parse_dependency_edges(&std::fs::read_to_string(path)?)
            .map_err(|e| CliError::Config(e.to_string())),
        None => Ok(BTreeSet::new()),
    }
}

fn load_lexicon(path: Option<&PathBuf>) -> Result<Lexicon, CliError> {
    match path {
        Some(path) => Lexicon::parse(&std::fs::read_to_string(path)?)
            .map_err(|e| CliError::Config(e.to_string())),
        None => Ok(Lexicon::builtin()),
    }
}

fn write_out(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Format(e.to_string()))?;
    text.push('\n');
    write_out(path, &text)
}

fn eprint_diagnostics(entries: &[String]) {
    let color = std::env::var_os("NO_COLOR").is_none();
    for entry in entries {
        if color {
            eprintln!("\x1b[33mdiagnostic\x1b[0m: {entry}");
        } else {
            eprintln!("diagnostic: {entry}");
        }
    }
}

fn snapshot_series(
    commits: &[CommitRecord],
    messages: &[MessageRecord],
    deps: &BTreeSet<(String, String)>,
    span: Window,
    window_days: i64,
    step_days: i64,
) -> Result<Vec<Snapshot>, CliError> {
    if window_days <= 0 || step_days <= 0 {
        return Err(CliError::Usage("--window and --step must be positive".into()));
    }
    let config = SnapshotConfig::default();
    let mut snapshots = Vec::new();
    let mut cursor = span.start;
    while cursor < span.end {
        let window = Window::new(cursor, cursor + Duration::days(window_days))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        snapshots.push(build_snapshot(commits, messages, deps, window, &config));
        cursor += Duration::days(step_days);
    }
    Ok(snapshots)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest {
            kind,
            input,
            alias_map,
            out,
        } => {
            let mut manifest = RunManifest::start("ingest");
            manifest.input(&input);
            if let Some(map) = &alias_map {
                manifest.input(map);
            }
            manifest.output(&out);
            let aliases = match &alias_map {
                Some(path) => AliasMap::parse(&std::fs::read_to_string(path)?)
                    .map_err(|e| CliError::Config(e.to_string()))?,
                None => AliasMap::default(),
            };
            let reader = open(&input)?;
            let mut buffer = Vec::new();
            let diagnostics = match kind.as_str() {
                "numstat" => {
                    let parsed = parse_numstat_log(reader, &aliases)
                        .map_err(|e| CliError::Format(e.to_string()))?;
                    write_jsonl(&parsed.records, &mut buffer)
                        .map_err(|e| CliError::Format(e.to_string()))?;
                    parsed.diagnostics
                }
                "mbox" => {
                    let parsed = parse_mbox(reader, &aliases)
                        .map_err(|e| CliError::Format(e.to_string()))?;
                    write_jsonl(&parsed.records, &mut buffer)
                        .map_err(|e| CliError::Format(e.to_string()))?;
                    parsed.diagnostics
                }
                "issues" => {
                    let parsed = parse_issues_json(reader, &aliases)
                        .map_err(|e| CliError::Format(e.to_string()))?;
                    write_jsonl(&parsed.records, &mut buffer)
                        .map_err(|e| CliError::Format(e.to_string()))?;
                    parsed.diagnostics
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown ingest kind `{other}` (numstat | mbox | issues)"
                    )))
                }
            };
            write_out(&out, std::str::from_utf8(&buffer).unwrap_or_default())?;
            eprint_diagnostics(&diagnostics.entries);
            manifest.finish()?;
            Ok(())
        }
        Command::Snapshot {
            commits,
            messages,
            deps,
            lexicon,
            from,
            to,
            out,
        } => {
            let mut manifest = RunManifest::start("snapshot");
            manifest.input(&commits);
            manifest.output(&out);
            let window = parse_window(&from, &to)?;
            let commit_records = load_commits(&commits)?;
            let message_records = load_messages(messages.as_ref())?;
            let edges = load_deps(deps.as_ref())?;
            let config = SnapshotConfig {
                include_merges: false,
                lexicon: load_lexicon(lexicon.as_ref())?,
            };
            let snapshot =
                build_snapshot(&commit_records, &message_records, &edges, window, &config);
            write_json(&out, &snapshot)?;
            manifest.finish()?;
            Ok(())
        }
        Command::Indicators {
            commits,
            messages,
            kind,
            author,
            measure,
            from,
            to,
            window,
            step,
            lexicon,
            format,
            out,
        } => {
            let mut manifest = RunManifest::start("indicators");
            manifest.output(&out);
            let format: Format = format
                .parse()
                .map_err(|e: stt_cli::render::RenderError| CliError::Usage(e.to_string()))?;
            let need_author = || {
                author
                    .clone()
                    .map(|a| AuthorId::new(&a))
                    .ok_or_else(|| CliError::Usage("--author is required for this kind".into()))
            };
            let need_commits = || -> Result<Vec<CommitRecord>, CliError> {
                let path = commits
                    .clone()
                    .ok_or_else(|| CliError::Usage("--commits is required for this kind".into()))?;
                manifestless_load(&path)
            };
            let document = match kind.as_str() {
                "stats" => {
                    let records = need_commits()?;
                    let author = need_author()?;
                    let period = match (&from, &to) {
                        (Some(f), Some(t)) => parse_window(f, t)?,
                        _ => full_span(&records)?,
                    };
                    Document::Stats(author_change_stats(&records, &author, period, false, true))
                }
                "centrality" => {
                    let records = need_commits()?;
                    let author = need_author()?;
                    let measure = centrality_measure(&measure)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    Document::Series(centrality_series(
                        &records,
                        &author,
                        window,
                        step,
                        measure.as_ref(),
                    ))
                }
                "hours" => {
                    let records = need_commits()?;
                    let author = need_author()?;
                    Document::Hours(hour_of_day_profile(&records, &author))
                }
                "comm" => {
                    let message_records = load_messages(messages.as_ref())?;
                    let period = match (&from, &to) {
                        (Some(f), Some(t)) => parse_window(f, t)?,
                        _ => message_span(&message_records)?,
                    };
                    Document::Graph(communication_graph(
                        &message_records,
                        &load_lexicon(lexicon.as_ref())?,
                        period,
                    ))
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown indicators kind `{other}` (stats | centrality | hours | comm)"
                    )))
                }
            };
            let rendered = document
                .render(format)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_out(&out, &rendered)?;
            manifest.finish()?;
            Ok(())
        }
        Command::Cluster {
            messages,
            author,
            seed,
            k,
            lexicon,
            format,
            out,
        } => {
            let mut manifest = RunManifest::start("cluster");
            manifest.input(&messages);
            manifest.output(&out);
            manifest.seed = Some(seed);
            let format: Format = format
                .parse()
                .map_err(|e: stt_cli::render::RenderError| CliError::Usage(e.to_string()))?;
            let message_records = load_messages(Some(&messages))?;
            let k_range = parse_k_range(&k)?;
            let report = account_style_clusters(
                &message_records,
                &AuthorId::new(&author),
                &load_lexicon(lexicon.as_ref())?,
                &k_range,
                seed,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            let rendered = Document::Clusters(report)
                .render(format)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_out(&out, &rendered)?;
            manifest.finish()?;
            Ok(())
        }
        Command::Detect {
            commits,
            messages,
            deps,
            config,
            from,
            to,
            window,
            step,
            out,
        } => {
            let mut manifest = RunManifest::start("detect");
            manifest.input(&commits);
            manifest.config_path = config.clone();
            manifest.output(&out);
            let loop_config = match &config {
                Some(path) => LoopConfig::from_toml(&std::fs::read_to_string(path)?)
                    .map_err(|e| CliError::Config(e.to_string()))?,
                None => LoopConfig::default(),
            };
            let span = parse_window(&from, &to)?;
            let commit_records = load_commits(&commits)?;
            let message_records = load_messages(messages.as_ref())?;
            let edges = load_deps(deps.as_ref())?;
            let snapshots =
                snapshot_series(&commit_records, &message_records, &edges, span, window, step)?;
            let reports = run_detection(snapshots, &loop_config, &AnalyzerRegistry::builtin())
                .map_err(|e| CliError::Config(e.to_string()))?;
            write_json(&out, &reports)?;
            manifest.finish()?;
            Ok(())
        }
        Command::Report { input, format, out } => {
            let mut manifest = RunManifest::start("report");
            manifest.input(&input);
            manifest.output(&out);
            let format: Format = format
                .parse()
                .map_err(|e: stt_cli::render::RenderError| CliError::Usage(e.to_string()))?;
            let text = std::fs::read_to_string(&input)?;
            let document =
                Document::parse(&text).map_err(|e| CliError::Format(e.to_string()))?;
            let rendered = document
                .render(format)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_out(&out, &rendered)?;
            manifest.finish()?;
            Ok(())
        }
        Command::GenFixture {
            seed,
            out,
            inject,
            n_authors,
            n_files,
            n_months,
            rate,
        } => {
            let mut manifest = RunManifest::start("gen-fixture");
            manifest.seed = Some(seed);
            let scenario = ScenarioConfig {
                seed,
                n_authors,
                n_files,
                n_months,
                commits_per_author_month: rate,
                ..Default::default()
            };
            let history = generate_benign_history(&scenario)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let (history, truth) = if inject {
                let (h, t) = inject_attack(&history, &scenario, &InjectionParams::default(), seed)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                (h, Some(t))
            } else {
                (history, None)
            };
            std::fs::create_dir_all(&out)?;
            let commits_path = out.join("commits.jsonl");
            let messages_path = out.join("messages.jsonl");
            let deps_path = out.join("deps.txt");
            manifest.output(&commits_path).output(&messages_path).output(&deps_path);
            let mut buffer = Vec::new();
            write_jsonl(&history.commits, &mut buffer)
                .map_err(|e| CliError::Format(e.to_string()))?;
            std::fs::write(&commits_path, &buffer)?;
            buffer.clear();
            write_jsonl(&history.messages, &mut buffer)
                .map_err(|e| CliError::Format(e.to_string()))?;
            std::fs::write(&messages_path, &buffer)?;
            let mut deps_text = String::new();
            for (src, dst) in &history.dependency_edges {
                deps_text.push_str(&format!("{src} -> {dst}\n"));
            }
            std::fs::write(&deps_path, deps_text)?;
            write_json(&out.join("scenario.json"), &scenario)?;
            if let Some(truth) = truth {
                write_json(&out.join("ground_truth.json"), &truth)?;
            }
            manifest.finish()?;
            Ok(())
        }
    }
}

fn manifestless_load(path: &Path) -> Result<Vec<CommitRecord>, CliError> {
    load_commits(path)
}

fn full_span(commits: &[CommitRecord]) -> Result<Window, CliError> {
    let lo = commits.iter().map(|c| c.timestamp).min();
    let hi = commits.iter().map(|c| c.timestamp).max();
    match (lo, hi) {
        (Some(lo), Some(hi)) => Window::new(lo, hi + Duration::seconds(1))
            .map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage("no commits in input".into())),
    }
}

fn message_span(messages: &[MessageRecord]) -> Result<Window, CliError> {
    let lo = messages.iter().map(|m| m.timestamp).min();
    let hi = messages.iter().map(|m| m.timestamp).max();
    match (lo, hi) {
        (Some(lo), Some(hi)) => Window::new(lo, hi + Duration::seconds(1))
            .map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage("no messages in input".into())),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        let color = std::env::var_os("NO_COLOR").is_none();
        if color {
            eprintln!("\x1b[31merror\x1b[0m: {error}");
        } else {
            eprintln!("error: {error}");
        }
        std::process::exit(error.exit_code());
    }
    let _ = std::io::stdout().flush();
}
