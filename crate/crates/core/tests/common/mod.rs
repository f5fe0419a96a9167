//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use flate2::read::GzDecoder;
use serde_json::Value;

use openindex_core::concepts::ConceptTree;
use openindex_core::fixtures::{self, fixture_dir, read_institutions_jsonl};
use openindex_core::identifiers::IssnLinkingTable;
use openindex_core::ingest::{parse_crossref, IngestOutcome, Pipeline, PipelineConfig};
use openindex_core::model::SourceKind;
use openindex_core::store::{Clock, Store, StoreOptions};

pub fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 9, 7).unwrap()
}

pub fn opts() -> StoreOptions {
    StoreOptions { sync: false, clock: Clock::Fixed(day()), ..Default::default() }
}

pub fn open(dir: &Path) -> Store {
    Store::open_with(dir, opts()).unwrap()
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn jsonl(name: &str) -> Vec<Value> {
    fixture(name).lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).unwrap()).collect()
}

pub fn issn_table() -> IssnLinkingTable {
    IssnLinkingTable::from_csv_reader(fixture("issn_linking.csv").as_bytes()).unwrap()
}

pub fn full_tree() -> ConceptTree {
    ConceptTree::from_jsonl(&fixture("tree_full_shape.jsonl")).unwrap()
}

/// A pipeline with the ISSN-L table, the full-shape tree and the toy registry.
pub fn full_pipeline(store: &Store) -> Pipeline<'_> {
    let mut p = Pipeline::new(store, PipelineConfig::default())
        .with_issn_table(issn_table())
        .with_concept_tree(full_tree())
        .unwrap();
    p.seed_institutions(read_institutions_jsonl(&fixture("institutions_toy.jsonl")).unwrap()).unwrap();
    p
}

/// Parse and ingest Crossref-style records; returns outcome counts.
pub fn ingest_all(p: &mut Pipeline, records: &[Value], source: SourceKind) -> BTreeMap<IngestOutcome, usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        let parsed = parse_crossref(r, source, day()).unwrap();
        let report = p.ingest_parsed(parsed).unwrap();
        *counts.entry(report.outcome).or_insert(0) += 1;
    }
    counts
}

/// Every record in a dump, read straight from the gzip parts as JSON,
/// keyed by kind directory name.
pub fn raw_dump_records(dir: &Path) -> BTreeMap<String, Vec<Value>> {
    let mut out: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    for k in manifest["kinds"].as_array().unwrap() {
        let kind = k["kind"].as_str().unwrap().to_owned();
        let list = out.entry(kind).or_default();
        for f in k["files"].as_array().unwrap() {
            let bytes = std::fs::read(dir.join(f["path"].as_str().unwrap())).unwrap();
            let mut text = String::new();
            GzDecoder::new(&bytes[..]).read_to_string(&mut text).unwrap();
            list.extend(text.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()));
        }
    }
    out
}

/// `https://openalex.org/W12` → `W12`.
pub fn short(v: &Value) -> String {
    let s = v.as_str().unwrap();
    s.rsplit('/').next().unwrap().to_owned()
}

pub fn synthetic(n: usize, seed: u64) -> Vec<Value> {
    fixtures::synthetic_crossref(n, seed)
}
