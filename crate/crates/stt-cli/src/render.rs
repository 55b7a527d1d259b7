//! Deterministic report rendering: CSV, JSON, and SVG outputs that are
//! byte-identical for identical inputs (no timestamps, fixed palettes).

use std::fmt::Write as _;

use stt_core::cluster::ClusterReport;
use stt_core::indicators::{AuthorChangeStats, CentralitySeries, CommGraph, HourProfile};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("unsupported format/shape combination: {0}")]
    Usage(String),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = RenderError;
    fn from_str(s: &str) -> Result<Self, RenderError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(RenderError::Usage(format!("unknown format `{other}`"))),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;
/// Fixed fill palette keyed by cluster label.
const PALETTE: [&str; 6] = [
    "#1b6ca8", "#d1495b", "#66a182", "#edae49", "#8d6a9f", "#30323d",
];

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
}

fn scale(values: &[f64], lo_px: f64, hi_px: f64) -> impl Fn(f64) -> f64 {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if (max - min).abs() < 1e-12 { 1.0 } else { max - min };
    move |v| lo_px + (v - min) / span * (hi_px - lo_px)
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Line series (centrality over windows): one `<polyline>` with one vertex
/// per point.
pub fn centrality_series_svg(series: &CentralitySeries) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let _ = writeln!(
        out,
        "<title>{} centrality: {}</title>",
        series.measure, series.author
    );
    if !series.points.is_empty() {
        let xs: Vec<f64> = (0..series.points.len()).map(|i| i as f64).collect();
        let ys: Vec<f64> = series.points.iter().map(|(_, v)| *v).collect();
        let sx = scale(&xs, MARGIN, WIDTH - MARGIN);
        let sy = scale(&ys, HEIGHT - MARGIN, MARGIN);
        let vertices: Vec<String> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| format!("{},{}", fmt(sx(*x)), fmt(sy(*y))))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
            PALETTE[0],
            vertices.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn centrality_series_csv(series: &CentralitySeries) -> String {
    let mut out = String::from("window_start,window_end,measure,value\n");
    for (window, value) in &series.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            window.start.to_rfc3339(),
            window.end.to_rfc3339(),
            series.measure,
            value
        );
    }
    out
}

/// Hour-of-day histogram as a scatter: hour on x, count on y.
pub fn hour_profile_svg(profile: &HourProfile) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let _ = writeln!(out, "<title>commit hours: {}</title>", profile.author);
    let counts: Vec<f64> = profile.histogram.iter().map(|c| *c as f64).collect();
    let sy = scale(&counts, HEIGHT - MARGIN, MARGIN);
    for (hour, count) in profile.histogram.iter().enumerate() {
        let x = MARGIN + hour as f64 / 23.0 * (WIDTH - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>",
            fmt(x),
            fmt(sy(*count as f64)),
            PALETTE[0]
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn hour_profile_csv(profile: &HourProfile) -> String {
    let mut out = String::from("hour,count\n");
    for (hour, count) in profile.histogram.iter().enumerate() {
        let _ = writeln!(out, "{hour},{count}");
    }
    out
}

/// Communication graph: nodes on a circle, edges labeled with message
/// count and mean sentiment.
pub fn comm_graph_svg(graph: &CommGraph) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let nodes: Vec<&stt_core::ingest::AuthorId> = graph.nodes.iter().collect();
    let n = nodes.len().max(1) as f64;
    let cx = WIDTH / 2.0;
    let cy = HEIGHT / 2.0;
    let radius = (HEIGHT / 2.0) - MARGIN;
    let position = |index: usize| -> (f64, f64) {
        let angle = index as f64 / n * std::f64::consts::TAU;
        (cx + radius * angle.cos(), cy + radius * angle.sin())
    };
    for edge in &graph.edges {
        let i = nodes.iter().position(|a| **a == edge.a1).unwrap_or(0);
        let j = nodes.iter().position(|a| **a == edge.a2).unwrap_or(0);
        let (x1, y1) = position(i);
        let (x2, y2) = position(j);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\"/>",
            fmt(x1),
            fmt(y1),
            fmt(x2),
            fmt(y2)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"9\">{} / {:.2}</text>",
            fmt((x1 + x2) / 2.0),
            fmt((y1 + y2) / 2.0),
            edge.message_count,
            edge.mean_sentiment
        );
    }
    for (i, node) in nodes.iter().enumerate() {
        let (x, y) = position(i);
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"6\" fill=\"{}\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>",
            fmt(x),
            fmt(y),
            PALETTE[0],
            fmt(x + 8.0),
            fmt(y),
            node
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn comm_graph_csv(graph: &CommGraph) -> String {
    let mut out = String::from("author1,author2,message_count,mean_sentiment\n");
    for edge in &graph.edges {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            edge.a1, edge.a2, edge.message_count, edge.mean_sentiment
        );
    }
    out
}

/// Cluster timeline: one scatter mark per message, fill keyed by label,
/// x by timeline order, y by polarity.
pub fn cluster_report_svg(report: &ClusterReport) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let _ = writeln!(
        out,
        "<title>style clusters: {} (k={})</title>",
        report.account, report.chosen_k
    );
    let ys: Vec<f64> = report.timeline.iter().map(|e| e.polarity).collect();
    if !ys.is_empty() {
        let sy = scale(&ys, HEIGHT - MARGIN, MARGIN);
        let n = report.timeline.len().max(2) as f64;
        for (i, entry) in report.timeline.iter().enumerate() {
            let x = MARGIN + i as f64 / (n - 1.0) * (WIDTH - 2.0 * MARGIN);
            let _ = writeln!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\" data-label=\"{}\"/>",
                fmt(x),
                fmt(sy(entry.polarity)),
                PALETTE[entry.label % PALETTE.len()],
                entry.label
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn cluster_report_csv(report: &ClusterReport) -> String {
    let mut out = String::from("message_id,timestamp,label,polarity\n");
    for entry in &report.timeline {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            entry.message_id,
            entry.timestamp.to_rfc3339(),
            entry.label,
            entry.polarity
        );
    }
    out
}

pub fn change_stats_csv(stats: &AuthorChangeStats) -> String {
    let mut out = String::from(
        "author,total_file_changes,avg_additions,avg_deletions,avg_total,std_additions,std_deletions,std_total\n",
    );
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        stats.author,
        stats.total_file_changes,
        stats.avg_additions,
        stats.avg_deletions,
        stats.avg_total,
        stats.std_additions,
        stats.std_deletions,
        stats.std_total
    );
    out
}

/// Shapes the `report` subcommand can render from a JSON document.
pub enum Document {
    Series(CentralitySeries),
    Hours(HourProfile),
    Graph(CommGraph),
    Clusters(ClusterReport),
    Stats(AuthorChangeStats),
}

impl Document {
    /// Sniffs the document shape from its fields.
    pub fn parse(text: &str) -> Result<Document, RenderError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let has = |k: &str| value.get(k).is_some();
        let doc = if has("points") && has("measure") {
            Document::Series(serde_json::from_value(value)?)
        } else if has("histogram") {
            Document::Hours(serde_json::from_value(value)?)
        } else if has("edges") && has("nodes") {
            Document::Graph(serde_json::from_value(value)?)
        } else if has("timeline") && has("chosen_k") {
            Document::Clusters(serde_json::from_value(value)?)
        } else if has("avg_total") && has("total_file_changes") {
            Document::Stats(serde_json::from_value(value)?)
        } else {
            return Err(RenderError::Usage(
                "input JSON does not match any renderable shape".into(),
            ));
        };
        Ok(doc)
    }

    pub fn render(&self, format: Format) -> Result<String, RenderError> {
        match (self, format) {
            (Document::Series(s), Format::Csv) => Ok(centrality_series_csv(s)),
            (Document::Series(s), Format::Svg) => Ok(centrality_series_svg(s)),
            (Document::Series(s), Format::Json) => Ok(to_json(s)?),
            (Document::Hours(p), Format::Csv) => Ok(hour_profile_csv(p)),
            (Document::Hours(p), Format::Svg) => Ok(hour_profile_svg(p)),
            (Document::Hours(p), Format::Json) => Ok(to_json(p)?),
            (Document::Graph(g), Format::Csv) => Ok(comm_graph_csv(g)),
            (Document::Graph(g), Format::Svg) => Ok(comm_graph_svg(g)),
            (Document::Graph(g), Format::Json) => Ok(to_json(g)?),
            (Document::Clusters(r), Format::Csv) => Ok(cluster_report_csv(r)),
            (Document::Clusters(r), Format::Svg) => Ok(cluster_report_svg(r)),
            (Document::Clusters(r), Format::Json) => Ok(to_json(r)?),
            (Document::Stats(s), Format::Csv) => Ok(change_stats_csv(s)),
            (Document::Stats(s), Format::Json) => Ok(to_json(s)?),
            (Document::Stats(s), Format::Svg) => {
                let _ = s;
                Err(RenderError::Usage(
                    "change statistics have no SVG rendering".into(),
                ))
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, Duration};
    use stt_core::ingest::AuthorId;
    use stt_core::topology::Window;

    fn series(n: usize) -> CentralitySeries {
        let start = DateTime::parse_from_rfc3339("2024-01-01T00:00:00+00:00").unwrap();
        CentralitySeries {
            author: AuthorId::new("dev"),
            measure: "degree".into(),
            points: (0..n)
                .map(|i| {
                    let s = start + Duration::days(30 * i as i64);
                    (Window::new(s, s + Duration::days(30)).unwrap(), i as f64 / 10.0)
                })
                .collect(),
        }
    }

    #[test]
    fn empty_series_csv_is_header_only() {
        assert_eq!(
            centrality_series_csv(&series(0)),
            "window_start,window_end,measure,value\n"
        );
    }

    #[test]
    fn three_point_series_svg_has_one_polyline_with_three_vertices() {
        let svg = centrality_series_svg(&series(3));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let points_attr = svg
            .split("points=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .unwrap();
        assert_eq!(points_attr.split_whitespace().count(), 3);
    }

    #[test]
    fn cluster_timeline_svg_has_one_mark_per_message_keyed_by_label() {
        let start = DateTime::parse_from_rfc3339("2024-01-01T00:00:00+00:00").unwrap();
        let timeline: Vec<stt_core::cluster::TimelineEntry> = (0..5)
            .map(|i| stt_core::cluster::TimelineEntry {
                message_id: format!("m{i}"),
                timestamp: start + Duration::hours(i),
                label: (i % 2) as usize,
                polarity: i as f64 / 5.0,
            })
            .collect();
        let report = ClusterReport {
            account: AuthorId::new("dev"),
            k_evaluated: vec![(2, 0.7)],
            chosen_k: 2,
            assignments: vec![0, 1, 0, 1, 0],
            centroids: vec![],
            timeline,
            dropped_columns: vec![],
            weak_separation: false,
        };
        let svg = cluster_report_svg(&report);
        assert_eq!(svg.matches("<circle").count(), 5);
        assert!(svg.contains(&format!("fill=\"{}\"", PALETTE[0])));
        assert!(svg.contains(&format!("fill=\"{}\"", PALETTE[1])));
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = series(4);
        assert_eq!(centrality_series_svg(&s), centrality_series_svg(&s));
        assert_eq!(centrality_series_csv(&s), centrality_series_csv(&s));
    }

    #[test]
    fn document_sniffing_round_trips() {
        let s = series(2);
        let json = serde_json::to_string(&s).unwrap();
        let doc = Document::parse(&json).unwrap();
        assert!(matches!(doc, Document::Series(_)));
        assert!(doc.render(Format::Csv).unwrap().starts_with("window_start"));
        assert!(matches!(
            Document::parse("{\"unknown\": 1}"),
            Err(RenderError::Usage(_))
        ));
    }
}
