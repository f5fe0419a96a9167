mod common;

use common::*;
use openindex_core::model::{Entity, EntityKind, SourceKind};
use openindex_core::store::{dump, DumpError, Store, StoreError, StoreOptions};

fn loaded(dir: &std::path::Path) -> Store {
    let store = open(dir);
    {
        let mut p = full_pipeline(&store);
        ingest_all(&mut p, &synthetic(80, 21), SourceKind::Crossref);
    }
    store.recompute_aggregates().unwrap();
    store
}

fn records(store: &Store) -> Vec<String> {
    let st = store.read();
    EntityKind::ALL.iter().flat_map(|k| st.iter(*k).map(Entity::to_record_json).collect::<Vec<_>>()).collect()
}

#[test]
fn second_open_is_busy() {
    let dir = tempfile::tempdir().unwrap();
    let _a = open(dir.path());
    assert!(matches!(Store::open_with(dir.path(), opts()), Err(StoreError::Busy(_))));
}

#[test]
fn reopen_and_compaction_preserve_state() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let s = loaded(dir.path());
        records(&s)
    };
    let s = open(dir.path());
    assert_eq!(records(&s), before);
    s.compact().unwrap();
    drop(s);
    let s = open(dir.path());
    assert_eq!(records(&s), before);
    assert_eq!(s.recovery().log_entries, 0);
    assert!(s.integrity_check().is_empty());
}

#[test]
fn automatic_compaction_keeps_ids_monotonic() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open_with(dir.path(), StoreOptions { compact_after_bytes: 4096, ..opts() }).unwrap();
    {
        let mut p = full_pipeline(&store);
        ingest_all(&mut p, &synthetic(40, 22), SourceKind::Crossref);
    }
    let last = store.allocator_state();
    drop(store);
    let store = open(dir.path());
    assert_eq!(store.allocator_state(), last);
    let next = store.mint(EntityKind::Work).unwrap();
    assert_eq!(next.serial(), last[EntityKind::Work.index()] + 1);
}

#[test]
fn import_refuses_non_empty_store_and_dirty_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let store = loaded(&dir.path().join("s"));
    let out = dir.path().join("d");
    store.export_dump(&out).unwrap();
    assert!(matches!(store.export_dump(&out), Err(DumpError::OutDirNotEmpty(_))));
    assert!(matches!(store.import_dump(&out), Err(DumpError::StoreNotEmpty)));
}

#[test]
fn dump_digest_mismatch_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let store = loaded(&dir.path().join("s"));
    let out = dir.path().join("d");
    store.export_dump(&out).unwrap();
    let name = dump::data_files(&out).unwrap().into_keys().next().unwrap();
    let path = out.join(&name);
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    match dump::read_dump(&out) {
        Err(DumpError::Digest { path, .. }) => assert_eq!(path, name),
        other => panic!("expected digest error, got {other:?}"),
    }
}

#[test]
fn imported_store_keeps_dates_and_allocator() {
    let dir = tempfile::tempdir().unwrap();
    let store = loaded(&dir.path().join("s"));
    let out = dir.path().join("d");
    store.export_dump(&out).unwrap();
    let fresh = open(&dir.path().join("f"));
    fresh.import_dump(&out).unwrap();
    assert_eq!(records(&fresh), records(&store));
    assert_eq!(fresh.allocator_state(), store.allocator_state());
    assert!(fresh.read().dump_created_date().is_some());
}
