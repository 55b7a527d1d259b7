//! Socio-technical topology analysis for open-source repositories:
//! ingestion of commit/message corpora, windowed topology snapshots,
//! behavioural indicators, stylometric clustering, a MAPE-K detection
//! loop, and a synthetic fixture generator for controlled experiments.

pub mod cluster;
pub mod fixtures;
pub mod indicators;
pub mod ingest;
pub mod mapek;
pub mod textmetrics;
pub mod topology;
