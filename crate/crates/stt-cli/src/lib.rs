//! Library surface of the command-line tool: rendering and run manifests,
//! exposed so integration tests can call them directly.

pub mod manifest;
pub mod render;
