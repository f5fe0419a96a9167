//! Portable dump: gzip JSON Lines partitioned by kind and `updated_date`,
//! with a `manifest.json` listing every part's record count and SHA-256.
//!
//! Layout: `data/{kind}/updated_date=YYYY-MM-DD/part_NNN.jsonl.gz`. Parts
//! hold at most [`PART_SIZE`] records in ascending serial order. Each line
//! is one record with keys in struct declaration order; gzip headers carry
//! no name or timestamp, so equal stores produce equal bytes.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use flate2::read::GzDecoder;
use flate2::{Compression, GzBuilder};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{State, Store, StoreError};
use crate::model::{Entity, EntityKind, OpenAlexId};

pub const PART_SIZE: usize = 10_000;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("output directory {0} is not empty")]
    OutDirNotEmpty(PathBuf),
    #[error("import requires an empty store")]
    StoreNotEmpty,
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("{path}: SHA-256 mismatch (manifest {expected}, file {actual})")]
    Digest { path: String, expected: String, actual: String },
    #[error("{path}: manifest lists {expected} records, file has {actual}")]
    Count { path: String, expected: usize, actual: usize },
    #[error("{path} line {line}: {message}")]
    Record { path: String, line: usize, message: String },
    #[error("{id} appears in both {first} and {second}")]
    Duplicate { id: OpenAlexId, first: String, second: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DumpError + '_ {
    move |source| DumpError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub record_count: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindManifest {
    pub kind: String,
    pub total: usize,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub created_date: NaiveDate,
    pub kinds: Vec<KindManifest>,
}

impl DumpManifest {
    pub fn total(&self, kind: EntityKind) -> usize {
        self.kinds.iter().find(|k| k.kind == kind.plural()).map_or(0, |k| k.total)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    crate::hex(&Sha256::digest(bytes))
}

fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut enc = GzBuilder::new().mtime(0).write(Vec::new(), Compression::default());
    enc.write_all(bytes).expect("writing to memory");
    enc.finish().expect("writing to memory")
}

pub(crate) fn export(state: &State, out_dir: &Path, created_date: NaiveDate) -> Result<DumpManifest, DumpError> {
    let existed = out_dir.exists();
    if existed {
        let mut entries = fs::read_dir(out_dir).map_err(io_err(out_dir))?;
        if entries.next().is_some() {
            return Err(DumpError::OutDirNotEmpty(out_dir.to_path_buf()));
        }
    }
    let result = write_dump(state, out_dir, created_date);
    if result.is_err() {
        if existed {
            let _ = fs::remove_dir_all(out_dir.join("data"));
            let _ = fs::remove_file(out_dir.join(MANIFEST));
        } else {
            let _ = fs::remove_dir_all(out_dir);
        }
    }
    result
}

fn write_dump(state: &State, out_dir: &Path, created_date: NaiveDate) -> Result<DumpManifest, DumpError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut kinds = Vec::new();
    for kind in EntityKind::ALL {
        let mut by_date: BTreeMap<NaiveDate, Vec<&Entity>> = BTreeMap::new();
        for e in state.iter(kind) {
            by_date.entry(e.updated_date()).or_default().push(e);
        }
        let mut files = Vec::new();
        for (date, records) in by_date {
            let rel_dir = format!("data/{}/updated_date={date}", kind.plural());
            let dir = out_dir.join(&rel_dir);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            for (n, chunk) in records.chunks(PART_SIZE).enumerate() {
                let mut text = String::new();
                for e in chunk {
                    text.push_str(&e.to_record_json());
                    text.push('\n');
                }
                let bytes = gzip(text.as_bytes());
                let name = format!("part_{n:03}.jsonl.gz");
                let path = dir.join(&name);
                fs::write(&path, &bytes).map_err(io_err(&path))?;
                files.push(FileEntry { path: format!("{rel_dir}/{name}"), record_count: chunk.len(), sha256: sha256_hex(&bytes) });
            }
        }
        kinds.push(KindManifest { kind: kind.plural().to_owned(), total: state.len(kind), files });
    }
    let manifest = DumpManifest { created_date, kinds };
    let path = out_dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(in_dir: &Path) -> Result<DumpManifest, DumpError> {
    let path = in_dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| DumpError::Manifest(e.to_string()))
}

/// Read and verify every part listed in the manifest.
pub fn read_dump(in_dir: &Path) -> Result<(DumpManifest, Vec<Entity>), DumpError> {
    let manifest = read_manifest(in_dir)?;
    let mut records = Vec::new();
    let mut seen: HashMap<OpenAlexId, String> = HashMap::new();
    for km in &manifest.kinds {
        let kind = EntityKind::from_plural(&km.kind).ok_or_else(|| DumpError::Manifest(format!("unknown kind {:?}", km.kind)))?;
        let listed: usize = km.files.iter().map(|f| f.record_count).sum();
        if listed != km.total {
            return Err(DumpError::Manifest(format!("{} total {} != sum of parts {listed}", km.kind, km.total)));
        }
        for f in &km.files {
            if f.path.split('/').any(|seg| seg == ".." || seg.is_empty()) {
                return Err(DumpError::Manifest(format!("unsafe path {:?}", f.path)));
            }
            let path = in_dir.join(&f.path);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let actual = sha256_hex(&bytes);
            if actual != f.sha256 {
                return Err(DumpError::Digest { path: f.path.clone(), expected: f.sha256.clone(), actual });
            }
            let mut text = String::new();
            GzDecoder::new(&bytes[..]).read_to_string(&mut text).map_err(io_err(&path))?;
            let mut count = 0;
            for (i, line) in text.as_bytes().lines().enumerate() {
                let line = line.map_err(io_err(&path))?;
                let bad = |message: String| DumpError::Record { path: f.path.clone(), line: i + 1, message };
                let e = Entity::from_record_json(kind, &line).map_err(|e| bad(e.to_string()))?;
                if e.kind() != kind {
                    return Err(bad(format!("{} is not a {kind}", e.id())));
                }
                if let Some(first) = seen.insert(e.id(), f.path.clone()) {
                    return Err(DumpError::Duplicate { id: e.id(), first, second: f.path.clone() });
                }
                records.push(e);
                count += 1;
            }
            if count != f.record_count {
                return Err(DumpError::Count { path: f.path.clone(), expected: f.record_count, actual: count });
            }
        }
    }
    Ok((manifest, records))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportReport {
    pub files: usize,
    pub records: BTreeMap<String, usize>,
}

pub(crate) fn import(store: &Store, in_dir: &Path) -> Result<ImportReport, DumpError> {
    let _g = store.gate();
    if !store.read().is_empty() {
        return Err(DumpError::StoreNotEmpty);
    }
    let (manifest, records) = read_dump(in_dir)?;
    let mut counts: BTreeMap<String, usize> = EntityKind::ALL.iter().map(|k| (k.plural().to_owned(), 0)).collect();
    for e in &records {
        *counts.get_mut(e.kind().plural()).expect("all kinds present") += 1;
    }
    let files = manifest.kinds.iter().map(|k| k.files.len()).sum();
    store.install(records, Some(manifest.created_date))?;
    Ok(ImportReport { files, records: counts })
}

/// Data files under `dir/data`, relative path → bytes, for comparisons.
pub fn data_files(dir: &Path) -> io::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.join("data")];
    while let Some(d) = stack.pop() {
        if !d.exists() {
            continue;
        }
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("under dir").to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&p)?);
            }
        }
    }
    Ok(out)
}
