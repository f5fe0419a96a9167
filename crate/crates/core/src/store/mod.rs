//! File-backed entity store: in-memory tables and indexes rebuilt from a
//! compacted snapshot plus an append-only write log.
//!
//! One process holds the directory lock. Inside it, writers serialize on
//! [`Store::gate`] and readers share [`Store::read`].

pub mod dump;
pub mod integrity;
pub mod query;
mod wal;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard, RwLock, RwLockReadGuard};

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::disambiguation::{fingerprint_from_raw, normalize_name};
use crate::identifiers::{normalize_doi, validate_issn, validate_orcid, validate_ror, validate_wikidata, IdError};
use crate::model::{self, AllocatorExhausted, Entity, EntityKind, IdAllocator, OpenAlexId, RecordViolation, SourceKind, Work};
use wal::{Batch, SnapshotHeader, Wal};

pub use dump::{DumpError, DumpManifest, FileEntry, ImportReport, KindManifest};
pub use integrity::{integrity_check, RecomputeReport};
pub use query::{Filter, ListQuery, ListResult, Paging, QueryError, Sort};

const LOCK_FILE: &str = "LOCK";
const LOG_FILE: &str = "wal.log";
const SNAPSHOT_FILE: &str = "snapshot.bin";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("store {0} is locked by another process")]
    Busy(PathBuf),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("invalid record: {}", join_violations(.0))]
    Invalid(Vec<RecordViolation>),
    #[error("{kind} external id {ceid} already belongs to {existing}, not {incoming}")]
    Conflict { kind: EntityKind, ceid: String, existing: OpenAlexId, incoming: OpenAlexId },
    #[error("{from}: {label} {to} does not exist")]
    DanglingEdge { from: OpenAlexId, label: String, to: OpenAlexId },
    #[error(transparent)]
    Exhausted(#[from] AllocatorExhausted),
    #[error("malformed external id {raw:?}: {reason}")]
    BadCeid { raw: String, reason: String },
}

fn join_violations(v: &[RecordViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Source of "today" for record dates; fixed in tests for reproducible dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    System,
    Fixed(NaiveDate),
}

impl Clock {
    pub fn today(self) -> NaiveDate {
        match self {
            Clock::System => chrono::Utc::now().date_naive(),
            Clock::Fixed(d) => d,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    /// fsync the log after every commit.
    pub sync: bool,
    /// Rewrite the snapshot once the log grows past this many bytes.
    pub compact_after_bytes: u64,
    pub clock: Clock,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self { sync: true, compact_after_bytes: 64 << 20, clock: Clock::System }
    }
}

/// What `open` found on disk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RecoveryReport {
    pub snapshot_records: usize,
    pub log_entries: usize,
    /// Bytes of torn or corrupt log tail that were discarded.
    pub truncated_bytes: u64,
}

/// Validate that `raw` is already the normalized CEID for `kind`.
pub fn normalize_ceid(kind: EntityKind, raw: &str) -> Result<String, IdError> {
    Ok(match kind {
        EntityKind::Work => normalize_doi(raw)?.as_str().to_owned(),
        EntityKind::Author => validate_orcid(raw)?.as_str().to_owned(),
        EntityKind::Venue => validate_issn(raw)?.as_str().to_owned(),
        EntityKind::Institution => validate_ror(raw)?.as_str().to_owned(),
        EntityKind::Concept => validate_wikidata(raw)?.as_str().to_owned(),
    })
}

pub(crate) fn work_fingerprint(w: &Work) -> Option<String> {
    fingerprint_from_raw(w.title.as_deref(), w.authorships.first().map(|a| a.raw_author_name.as_str()))
}

pub(crate) fn venue_name_key(v: &model::Venue) -> String {
    format!("{:?}|{}", v.venue_type, crate::text::fold_alnum(&v.display_name))
}

/// Committed records plus derived lookup indexes.
#[derive(Debug, Clone, Default)]
pub struct State {
    tables: [BTreeMap<u64, Entity>; 5],
    ceids: [HashMap<String, u64>; 5],
    fingerprints: HashMap<String, BTreeSet<u64>>,
    sources: HashMap<(SourceKind, String), u64>,
    families: HashMap<String, BTreeSet<u64>>,
    author_works: HashMap<u64, BTreeSet<u64>>,
    unresolved: HashMap<String, BTreeSet<u64>>,
    venue_names: HashMap<String, u64>,
    dump_created_date: Option<NaiveDate>,
}

impl State {
    pub fn get(&self, id: OpenAlexId) -> Option<&Entity> {
        self.tables[id.kind().index()].get(&id.serial())
    }

    pub fn contains(&self, id: OpenAlexId) -> bool {
        self.tables[id.kind().index()].contains_key(&id.serial())
    }

    pub fn work(&self, id: OpenAlexId) -> Option<&Work> {
        self.get(id).and_then(Entity::as_work)
    }

    /// Lookup by an already-normalized CEID.
    pub fn by_ceid(&self, kind: EntityKind, ceid: &str) -> Option<&Entity> {
        let serial = self.ceids[kind.index()].get(ceid)?;
        self.tables[kind.index()].get(serial)
    }

    pub fn iter(&self, kind: EntityKind) -> impl DoubleEndedIterator<Item = &Entity> + '_ {
        self.tables[kind.index()].values()
    }

    pub fn len(&self, kind: EntityKind) -> usize {
        self.tables[kind.index()].len()
    }

    pub fn total(&self) -> usize {
        self.tables.iter().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        EntityKind::ALL.iter().map(|k| (k.plural(), self.len(*k))).collect()
    }

    pub fn works_with_fingerprint(&self, fp: &str) -> impl Iterator<Item = OpenAlexId> + '_ {
        self.fingerprints.get(fp).into_iter().flatten().map(|s| work_id(*s))
    }

    pub fn work_by_source(&self, source: SourceKind, record_id: &str) -> Option<OpenAlexId> {
        self.sources.get(&(source, record_id.to_owned())).map(|s| work_id(*s))
    }

    /// Authors any of whose names has this folded family token.
    pub fn authors_with_family(&self, family: &str) -> impl Iterator<Item = OpenAlexId> + '_ {
        self.families
            .get(family)
            .into_iter()
            .flatten()
            .map(|s| OpenAlexId::new(EntityKind::Author, *s).expect("stored serials are positive"))
    }

    pub fn works_of_author(&self, author: OpenAlexId) -> impl Iterator<Item = OpenAlexId> + '_ {
        self.author_works.get(&author.serial()).into_iter().flatten().map(|s| work_id(*s))
    }

    /// Works holding `doi` in their unresolved reference list.
    pub fn citers_of_doi(&self, doi: &str) -> impl Iterator<Item = OpenAlexId> + '_ {
        self.unresolved.get(doi).into_iter().flatten().map(|s| work_id(*s))
    }

    /// Venue without an ISSN-L, keyed by type and folded display name.
    pub fn venue_by_name(&self, venue: &model::Venue) -> Option<OpenAlexId> {
        self.venue_names
            .get(&venue_name_key(venue))
            .map(|s| OpenAlexId::new(EntityKind::Venue, *s).expect("stored serials are positive"))
    }

    pub fn dump_created_date(&self) -> Option<NaiveDate> {
        self.dump_created_date
    }

    pub(crate) fn ceid_index(&self, kind: EntityKind) -> &HashMap<String, u64> {
        &self.ceids[kind.index()]
    }

    fn index(&mut self, e: &Entity, add: bool) {
        let serial = e.id().serial();
        let kind = e.kind();
        if let Some(c) = e.ceid() {
            let map = &mut self.ceids[kind.index()];
            if add {
                map.entry(c.to_owned()).or_insert(serial);
            } else if map.get(c) == Some(&serial) {
                map.remove(c);
            }
        }
        fn set_op<K: std::hash::Hash + Eq>(m: &mut HashMap<K, BTreeSet<u64>>, k: K, v: u64, add: bool) {
            if add {
                m.entry(k).or_default().insert(v);
            } else if let Some(s) = m.get_mut(&k) {
                s.remove(&v);
                if s.is_empty() {
                    m.remove(&k);
                }
            }
        }
        match e {
            Entity::Work(w) => {
                if let Some(fp) = work_fingerprint(w) {
                    set_op(&mut self.fingerprints, fp, serial, add);
                }
                for s in &w.sources {
                    let key = (s.source, s.source_record_id.clone());
                    if add {
                        self.sources.entry(key).or_insert(serial);
                    } else if self.sources.get(&key) == Some(&serial) {
                        self.sources.remove(&key);
                    }
                }
                for a in &w.authorships {
                    set_op(&mut self.author_works, a.author.serial(), serial, add);
                }
                for d in &w.unresolved_references {
                    set_op(&mut self.unresolved, d.as_str().to_owned(), serial, add);
                }
            }
            Entity::Author(a) => {
                for name in std::iter::once(&a.display_name).chain(&a.alternate_names) {
                    if let Ok(key) = normalize_name(name) {
                        set_op(&mut self.families, key.family().to_owned(), serial, add);
                    }
                }
            }
            Entity::Venue(v) if v.issn_l.is_none() => {
                let key = venue_name_key(v);
                if add {
                    self.venue_names.entry(key).or_insert(serial);
                } else if self.venue_names.get(&key) == Some(&serial) {
                    self.venue_names.remove(&key);
                }
            }
            _ => {}
        }
    }

    /// Replace or insert without any checks.
    pub(crate) fn put(&mut self, e: Entity) {
        let kind = e.kind().index();
        let serial = e.id().serial();
        if let Some(old) = self.tables[kind].remove(&serial) {
            self.index(&old, false);
        }
        self.index(&e, true);
        self.tables[kind].insert(serial, e);
    }
}

fn work_id(serial: u64) -> OpenAlexId {
    OpenAlexId::new(EntityKind::Work, serial).expect("stored serials are positive")
}

pub struct Store {
    dir: PathBuf,
    state: RwLock<State>,
    gate: Mutex<()>,
    wal: Mutex<Wal>,
    alloc: IdAllocator,
    opts: StoreOptions,
    recovery: RecoveryReport,
    _lock: File,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::open_with(dir, StoreOptions::default())
    }

    pub fn open_with(dir: impl AsRef<Path>, opts: StoreOptions) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(LOCK_FILE))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Busy(dir)),
            Err(fs::TryLockError::Error(e)) => return Err(e.into()),
        }

        let mut state = State::default();
        let alloc = IdAllocator::new();
        let mut recovery = RecoveryReport::default();

        let snap_path = dir.join(SNAPSHOT_FILE);
        if snap_path.exists() {
            let bytes = fs::read(&snap_path)?;
            let (frames, valid) = wal::read_frames(&bytes);
            if valid != bytes.len() || frames.is_empty() {
                return Err(StoreError::Corrupt(format!("{} is damaged", snap_path.display())));
            }
            let header: SnapshotHeader = serde_json::from_slice(frames[0])
                .map_err(|e| StoreError::Corrupt(format!("snapshot header: {e}")))?;
            if header.records != frames.len() - 1 {
                return Err(StoreError::Corrupt("snapshot record count mismatch".into()));
            }
            for f in &frames[1..] {
                let e: Entity =
                    serde_json::from_slice(f).map_err(|e| StoreError::Corrupt(format!("snapshot record: {e}")))?;
                alloc.observe(e.id());
                state.put(e);
            }
            alloc.raise_to(header.alloc);
            state.dump_created_date = header.dump_created_date;
            recovery.snapshot_records = header.records;
        }

        let log_path = dir.join(LOG_FILE);
        let log_bytes = match fs::read(&log_path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let (frames, mut valid) = wal::read_frames(&log_bytes);
        let mut offset = 0usize;
        for f in frames {
            // A frame whose checksum holds but whose body does not decode is
            // treated like a torn tail.
            let Ok(batch) = serde_json::from_slice::<Batch>(f) else {
                valid = offset;
                break;
            };
            offset += 8 + f.len();
            alloc.raise_to(batch.alloc);
            for e in batch.puts {
                alloc.observe(e.id());
                state.put(e);
            }
            recovery.log_entries += 1;
        }
        recovery.truncated_bytes = (log_bytes.len() - valid) as u64;
        let wal = Wal::open(&log_path, valid as u64, opts.sync)?;

        Ok(Self {
            dir,
            state: RwLock::new(state),
            gate: Mutex::new(()),
            wal: Mutex::new(wal),
            alloc,
            opts,
            recovery,
            _lock: lock,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn recovery(&self) -> &RecoveryReport {
        &self.recovery
    }

    pub fn today(&self) -> NaiveDate {
        self.opts.clock.today()
    }

    /// Shared read view of committed state.
    pub fn read(&self) -> RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|p| p.into_inner())
    }

    /// The single-writer gate. Hold it across a read-decide-commit sequence.
    pub fn gate(&self) -> MutexGuard<'_, ()> {
        self.gate.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn mint(&self, kind: EntityKind) -> Result<OpenAlexId, StoreError> {
        Ok(self.alloc.mint(kind)?)
    }

    /// Next serial that `mint` would issue for each kind.
    pub fn allocator_state(&self) -> [u64; 5] {
        self.alloc.snapshot()
    }

    pub fn get(&self, id: OpenAlexId) -> Option<Entity> {
        self.read().get(id).cloned()
    }

    /// Lookup by CEID. `ceid` must already be in normalized form.
    pub fn get_by_ceid(&self, kind: EntityKind, ceid: &str) -> Result<Option<Entity>, StoreError> {
        match normalize_ceid(kind, ceid) {
            Ok(n) if n == ceid => Ok(self.read().by_ceid(kind, ceid).cloned()),
            Ok(n) => Err(StoreError::BadCeid { raw: ceid.to_owned(), reason: format!("not normalized (expected {n})") }),
            Err(e) => Err(StoreError::BadCeid { raw: ceid.to_owned(), reason: e.to_string() }),
        }
    }

    /// Insert or replace one record atomically.
    pub fn upsert(&self, record: Entity) -> Result<Entity, StoreError> {
        let _g = self.gate();
        let id = record.id();
        self.commit(vec![record])?;
        Ok(self.get(id).expect("committed record is readable"))
    }

    /// Atomically write a batch. Callers outside `upsert` must hold the gate.
    ///
    /// Dates are stamped here: `updated_date` is today and `created_date` is
    /// kept from the stored version. Records identical to their stored
    /// version (dates aside) are skipped. Returns the records written.
    pub fn commit(&self, puts: Vec<Entity>) -> Result<Vec<Entity>, StoreError> {
        let today = self.today();
        let mut wal = self.wal.lock().unwrap_or_else(|p| p.into_inner());
        let staged = {
            let state = self.read();
            let mut staged: Vec<Entity> = Vec::with_capacity(puts.len());
            for mut e in puts {
                match state.get(e.id()) {
                    Some(old) => {
                        e.set_created_date(old.created_date());
                        e.set_updated_date(old.updated_date());
                        if *old == e {
                            continue;
                        }
                    }
                    None => e.set_created_date(today),
                }
                e.set_updated_date(today);
                if let Some(pos) = staged.iter().position(|s| s.id() == e.id()) {
                    staged[pos] = e;
                } else {
                    staged.push(e);
                }
            }
            self.check_batch(&state, &staged)?;
            staged
        };
        if staged.is_empty() {
            return Ok(staged);
        }
        for e in &staged {
            self.alloc.observe(e.id());
        }
        let batch = Batch { alloc: self.alloc.snapshot(), puts: staged };
        let payload = serde_json::to_vec(&batch).expect("batches serialize");
        wal.append(&payload)?;
        {
            let mut state = self.state.write().unwrap_or_else(|p| p.into_inner());
            for e in &batch.puts {
                state.put(e.clone());
            }
        }
        if wal.len() > self.opts.compact_after_bytes {
            self.write_snapshot(&self.read(), &mut wal)?;
        }
        Ok(batch.puts)
    }

    fn check_batch(&self, state: &State, staged: &[Entity]) -> Result<(), StoreError> {
        let violations: Vec<RecordViolation> = staged.iter().flat_map(model::validate).collect();
        if !violations.is_empty() {
            return Err(StoreError::Invalid(violations));
        }
        let in_batch: HashMap<OpenAlexId, &Entity> = staged.iter().map(|e| (e.id(), e)).collect();
        let mut batch_ceids: HashMap<(EntityKind, &str), OpenAlexId> = HashMap::new();
        for e in staged {
            let Some(ceid) = e.ceid() else { continue };
            let kind = e.kind();
            if let Some(prev) = batch_ceids.insert((kind, ceid), e.id()) {
                return Err(StoreError::Conflict { kind, ceid: ceid.to_owned(), existing: prev, incoming: e.id() });
            }
            if let Some(owner) = state.by_ceid(kind, ceid).map(Entity::id) {
                let still_holds = in_batch.get(&owner).is_none_or(|staged_owner| staged_owner.ceid() == Some(ceid));
                if owner != e.id() && still_holds {
                    return Err(StoreError::Conflict { kind, ceid: ceid.to_owned(), existing: owner, incoming: e.id() });
                }
            }
        }
        for e in staged {
            for (label, to) in e.edges() {
                if !state.contains(to) && !in_batch.contains_key(&to) {
                    return Err(StoreError::DanglingEdge { from: e.id(), label, to });
                }
            }
        }
        Ok(())
    }

    /// Rewrite the snapshot from current state and empty the log.
    pub fn compact(&self) -> Result<(), StoreError> {
        let _g = self.gate();
        let mut wal = self.wal.lock().unwrap_or_else(|p| p.into_inner());
        self.write_snapshot(&self.read(), &mut wal)
    }

    fn write_snapshot(&self, state: &State, wal: &mut Wal) -> Result<(), StoreError> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        {
            let mut out = io::BufWriter::new(File::create(&tmp)?);
            let header = SnapshotHeader {
                alloc: self.alloc.snapshot(),
                records: state.total(),
                dump_created_date: state.dump_created_date,
            };
            out.write_all(&wal::frame(&serde_json::to_vec(&header).expect("header serializes")))?;
            for kind in EntityKind::ALL {
                for e in state.iter(kind) {
                    out.write_all(&wal::frame(&serde_json::to_vec(e).expect("entities serialize")))?;
                }
            }
            out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        if let Ok(d) = File::open(&self.dir) {
            let _ = d.sync_all();
        }
        wal.reset()?;
        Ok(())
    }

    /// Flush buffered log writes (only relevant with `sync = false`).
    pub fn flush(&self) -> Result<(), StoreError> {
        self.wal.lock().unwrap_or_else(|p| p.into_inner()).flush()?;
        Ok(())
    }

    /// Replace the (empty) state wholesale, bypassing edge checks, and
    /// persist it as a fresh snapshot. Used by dump import.
    pub(crate) fn install(&self, records: Vec<Entity>, dump_created_date: Option<NaiveDate>) -> Result<(), StoreError> {
        let mut wal = self.wal.lock().unwrap_or_else(|p| p.into_inner());
        {
            let mut state = self.state.write().unwrap_or_else(|p| p.into_inner());
            for e in records {
                self.alloc.observe(e.id());
                state.put(e);
            }
            state.dump_created_date = dump_created_date;
        }
        self.write_snapshot(&self.read(), &mut wal)
    }

    pub fn integrity_check(&self) -> Vec<RecordViolation> {
        integrity::integrity_check(&self.read())
    }

    pub fn recompute_aggregates(&self) -> Result<RecomputeReport, StoreError> {
        integrity::recompute_aggregates(self)
    }

    pub fn list(&self, kind: EntityKind, q: &ListQuery) -> Result<ListResult, QueryError> {
        query::list_entities(&self.read(), kind, q)
    }

    pub fn export_dump(&self, out_dir: &Path) -> Result<DumpManifest, DumpError> {
        dump::export(&self.read(), out_dir, self.today())
    }

    pub fn import_dump(&self, in_dir: &Path) -> Result<ImportReport, DumpError> {
        dump::import(self, in_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Author, Venue, VenueType};

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 1, 2).unwrap()
    }

    fn opts() -> StoreOptions {
        StoreOptions { sync: false, clock: Clock::Fixed(day()), ..Default::default() }
    }

    fn author(store: &Store, name: &str, orcid: Option<&str>) -> Entity {
        Entity::Author(Author {
            id: store.mint(EntityKind::Author).unwrap(),
            orcid: orcid.map(|o| validate_orcid(o).unwrap()),
            display_name: name.into(),
            alternate_names: vec![],
            works_count: 0,
            cited_by_count: 0,
            created_date: day(),
            updated_date: day(),
        })
    }

    #[test]
    fn fresh_store_mints_from_one() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open_with(dir.path(), opts()).unwrap();
        for kind in EntityKind::ALL {
            assert_eq!(store.mint(kind).unwrap().serial(), 1);
        }
    }

    #[test]
    fn second_open_is_busy() {
        let dir = tempfile::tempdir().unwrap();
        let _a = Store::open_with(dir.path(), opts()).unwrap();
        assert!(matches!(Store::open_with(dir.path(), opts()), Err(StoreError::Busy(_))));
    }

    #[test]
    fn orcid_collision_is_a_conflict() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open_with(dir.path(), opts()).unwrap();
        store.upsert(author(&store, "Jason Priem", Some("0000-0001-6187-6610"))).unwrap();
        let err = store.upsert(author(&store, "J Priem", Some("0000-0001-6187-6610"))).unwrap_err();
        assert!(matches!(err, StoreError::Conflict { .. }));
        assert_eq!(store.read().len(EntityKind::Author), 1);
    }

    #[test]
    fn invalid_record_leaves_store_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open_with(dir.path(), opts()).unwrap();
        let bad = Entity::Venue(Venue {
            id: store.mint(EntityKind::Venue).unwrap(),
            issn_l: Some(validate_issn("0378-5955").unwrap()),
            issns: vec![],
            display_name: "Hearing Research".into(),
            venue_type: VenueType::Journal,
            works_count: 0,
            created_date: day(),
            updated_date: day(),
        });
        assert!(matches!(store.upsert(bad), Err(StoreError::Invalid(_))));
        assert!(store.read().is_empty());
    }

    #[test]
    fn ceid_lookup_requires_normalized_input() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open_with(dir.path(), opts()).unwrap();
        assert!(store.get_by_ceid(EntityKind::Author, "0000-0001-6187-6610").unwrap().is_none());
        assert!(matches!(
            store.get_by_ceid(EntityKind::Work, "DOI:10.1145/2740908.2742839"),
            Err(StoreError::BadCeid { .. })
        ));
    }

    #[test]
    fn reopen_replays_log_and_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = Store::open_with(dir.path(), opts()).unwrap();
            for i in 0..10 {
                store.upsert(author(&store, &format!("Author Number{i}"), None)).unwrap();
            }
            store.compact().unwrap();
            store.upsert(author(&store, "After Snapshot", None)).unwrap();
        }
        let store = Store::open_with(dir.path(), opts()).unwrap();
        assert_eq!(store.read().len(EntityKind::Author), 11);
        assert_eq!(store.recovery().snapshot_records, 10);
        assert_eq!(store.recovery().log_entries, 1);
        assert_eq!(store.mint(EntityKind::Author).unwrap().serial(), 12);
    }

    #[test]
    fn unchanged_record_is_not_rewritten() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open_with(dir.path(), opts()).unwrap();
        let a = author(&store, "Heather Piwowar", None);
        assert_eq!(store.commit(vec![a.clone()]).unwrap().len(), 1);
        assert!(store.commit(vec![a]).unwrap().is_empty());
    }
}
