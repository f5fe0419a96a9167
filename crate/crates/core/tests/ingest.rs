mod common;

use std::time::Duration;

use common::*;
use openindex_core::fixtures::{self, StubServer, KNOWN_DOI};
use openindex_core::ingest::{parse_crossref, parse_pubmed_set, HarvestClient, HarvestError, IngestOutcome, Pipeline, PipelineConfig, RejectReason, RetryPolicy};
use openindex_core::model::{Entity, EntityKind, SourceKind};

fn quick_retry() -> RetryPolicy {
    RetryPolicy { base: Duration::from_millis(5), factor: 2, max_attempts: 3 }
}

#[test]
fn bundled_fixtures_match_generators() {
    for (name, content) in fixtures::all_fixture_files() {
        assert_eq!(fixture(name), content, "{name} drifted; rerun the gen_fixtures example");
    }
}

#[test]
fn harvest_pages_follow_the_cursor() {
    let records = synthetic(250, 4);
    let server = StubServer::start(records.clone()).unwrap();
    let client = HarvestClient::with_retry(&server.base_url(), quick_retry());
    let sizes: Vec<usize> = client.pages(None, 100).map(|p| p.unwrap().records.len()).collect();
    assert_eq!(sizes, [100, 100, 50]);
    let all: Vec<_> = client.pages(None, 100).flat_map(|p| p.unwrap().records).collect();
    assert_eq!(all, records);
}

#[test]
fn harvest_of_empty_listing_is_one_empty_page() {
    let server = StubServer::start(vec![]).unwrap();
    let client = HarvestClient::with_retry(&server.base_url(), quick_retry());
    let pages: Vec<_> = client.pages(None, 50).collect::<Result<_, _>>().unwrap();
    assert_eq!(pages.len(), 1);
    assert!(pages[0].records.is_empty() && pages[0].next_cursor.is_none());
}

#[test]
fn harvest_retries_transient_failures() {
    let server = StubServer::start(synthetic(10, 5)).unwrap();
    server.fail_next(2);
    let client = HarvestClient::with_retry(&server.base_url(), quick_retry());
    let page = client.fetch_page(None, 20).unwrap();
    assert_eq!(page.records.len(), 10);
    assert_eq!(server.request_count(), 3);
}

#[test]
fn harvest_gives_up_and_resumes_from_the_cursor() {
    let records = synthetic(60, 6);
    let server = StubServer::start(records.clone()).unwrap();
    server.fail_after(2);
    let client = HarvestClient::with_retry(&server.base_url(), quick_retry());
    let mut pages = client.pages(None, 20);
    let mut got = Vec::new();
    let err = loop {
        match pages.next().unwrap() {
            Ok(p) => got.extend(p.records),
            Err(e) => break e,
        }
    };
    assert!(matches!(err, HarvestError::Transport { attempts: 3, .. }), "{err}");
    assert_eq!(got.len(), 40);
    let resume = pages.cursor().map(str::to_owned);
    server.heal();
    got.extend(client.pages(resume, 20).flat_map(|p| p.unwrap().records));
    assert_eq!(got, records);
}

#[test]
fn malformed_page_is_a_protocol_error() {
    let server = StubServer::start(synthetic(5, 7)).unwrap();
    server.malformed_next(1);
    let client = HarvestClient::with_retry(&server.base_url(), quick_retry());
    assert!(matches!(client.fetch_page(None, 5), Err(HarvestError::Protocol(_))));
}

#[test]
fn reingesting_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let records = synthetic(120, 8);
    let mut p = full_pipeline(&store);
    let first = ingest_all(&mut p, &records, SourceKind::Crossref);
    assert_eq!(first.get(&IngestOutcome::Created), Some(&120));
    let before: Vec<String> = store.read().iter(EntityKind::Work).map(Entity::to_record_json).collect();
    let counts = store.read().counts();
    let second = ingest_all(&mut p, &records, SourceKind::Crossref);
    assert_eq!(second.get(&IngestOutcome::Updated), Some(&120));
    let after: Vec<String> = store.read().iter(EntityKind::Work).map(Entity::to_record_json).collect();
    assert_eq!(before, after);
    assert_eq!(store.read().counts(), counts);
    assert!(store.integrity_check().is_empty());
}

#[test]
fn works_10_links_citations_and_institutions() {
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let mut p = full_pipeline(&store);
    ingest_all(&mut p, &jsonl("works_10.jsonl"), SourceKind::Crossref);
    drop(p);
    store.recompute_aggregates().unwrap();
    let known = store.get_by_ceid(EntityKind::Work, KNOWN_DOI).unwrap().unwrap();
    let Entity::Work(known) = known else { panic!() };
    assert_eq!(known.cited_by_count, 3);
    let orr = store.read().iter(EntityKind::Author).filter(|e| matches!(e, Entity::Author(a) if a.display_name == "Richard Orr")).count();
    assert_eq!(orr, 1, "both Orr mentions share an affiliation and a venue");
    let granada = store.read().iter(EntityKind::Institution).find(|e| matches!(e, Entity::Institution(i) if i.display_name == "University of Granada")).cloned().unwrap();
    let Entity::Institution(granada) = granada else { panic!() };
    assert_eq!(granada.works_count, 2);
}

#[test]
fn pubmed_sample_parses_and_rejects_nothing_silently() {
    let set = parse_pubmed_set(&fixture("pubmed_sample.xml"), day()).unwrap();
    assert_eq!(set.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    let store = open(dir.path());
    let mut p = Pipeline::new(&store, PipelineConfig::default());
    let mut reports = Vec::new();
    for parsed in set {
        reports.push(p.ingest_parsed(parsed.unwrap()).unwrap());
    }
    assert_eq!(reports.iter().map(|r| r.source_record_id.as_str()).collect::<Vec<_>>(), ["42", "43", "44"]);
    assert!(reports[0].warnings.is_empty());
    assert!(!reports[2].warnings.is_empty(), "bad ISSN should be reported");
    let w = store.get_by_ceid(EntityKind::Work, "10.5555/pubmed.42").unwrap();
    assert!(w.is_some());
}

#[test]
fn malformed_pubmed_is_rejected() {
    assert!(matches!(parse_pubmed_set("<PubmedArticleSet><PubmedArticle>", day()), Err(RejectReason::MalformedXml(_))));
}

#[test]
fn records_without_doi_or_title_are_rejected() {
    let r = serde_json::json!({"type": "journal-article", "author": [{"family": "X"}]});
    assert!(matches!(parse_crossref(&r, SourceKind::Crossref, day()), Err(RejectReason::Unidentifiable)));
}
