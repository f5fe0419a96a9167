//! Scholarly knowledge-graph engine: identifier normalization, record
//! ingestion, entity resolution, concept tagging, a file-backed graph store
//! with dump export/import, and a read-only HTTP API.

pub mod api;
pub mod concepts;
pub mod config;
pub mod disambiguation;
pub mod fixtures;
pub mod identifiers;
pub mod ingest;
pub mod model;
pub mod store;
pub mod text;

/// Lowercase hex encoding.
pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
