mod common;

use std::sync::Arc;

use serde_json::Value;

use common::*;
use openindex_core::api::{self, Api, ApiConfig};
use openindex_core::fixtures::KNOWN_DOI;
use openindex_core::model::SourceKind;

fn fixture_api() -> (tempfile::TempDir, Api) {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(open(dir.path()));
    {
        let mut p = full_pipeline(&store);
        ingest_all(&mut p, &jsonl("works_10.jsonl"), SourceKind::Crossref);
    }
    store.recompute_aggregates().unwrap();
    let mut api = Api::new(store, ApiConfig::default());
    api.issn_table = issn_table();
    (dir, api)
}

fn get(api: &Api, path: &str, query: Option<&str>) -> (u16, Value) {
    let r = api.handle("GET", path, query);
    (r.status, serde_json::from_str(&r.body).unwrap())
}

#[test]
fn year_filters() {
    let (_d, api) = fixture_api();
    let (s, v) = get(&api, "/works", Some("filter=publication_year:2022"));
    assert_eq!((s, v["meta"]["count"].as_u64()), (200, Some(3)));
    let (_, v) = get(&api, "/works", Some("filter=publication_year:2021|2022"));
    assert_eq!(v["meta"]["count"], 5);
}

#[test]
fn doi_lookup_in_any_form() {
    let (_d, api) = fixture_api();
    let (s, by_doi) = get(&api, &format!("/works/doi:{KNOWN_DOI}"), None);
    assert_eq!(s, 200);
    let short = by_doi["id"].as_str().unwrap().rsplit('/').next().unwrap().to_owned();
    let (_, by_id) = get(&api, &format!("/works/{short}"), None);
    assert_eq!(by_doi, by_id);
    let (_, by_url) = get(&api, "/works/doi:https%3A%2F%2Fdoi.org%2F10.1145%2F2740908.2742839", None);
    assert_eq!(by_url, by_id);
    assert_eq!(by_id["cited_by_count"], 3);
}

#[test]
fn errors_have_status_codes() {
    let (_d, api) = fixture_api();
    assert_eq!(api.handle("POST", "/works", None).status, 405);
    assert_eq!(api.handle("GET", "/widgets", None).status, 404);
    assert_eq!(api.handle("GET", "/works/W999999", None).status, 404);
    assert_eq!(api.handle("GET", "/works", Some("filter=colour:red")).status, 400);
    assert_eq!(api.handle("GET", "/works", Some("page=1&cursor=*")).status, 400);
    assert_eq!(api.handle("GET", "/works/doi:not-a-doi", None).status, 400);
}

#[test]
fn per_page_is_capped() {
    let (_d, api) = fixture_api();
    let (s, v) = get(&api, "/works", Some("per-page=5"));
    assert_eq!((s, v["results"].as_array().unwrap().len()), (200, 5));
    assert_eq!(api.handle("GET", "/works", Some("per-page=201")).status, 400);
}

#[test]
fn http_server_sends_cors_headers() {
    let (_d, api) = fixture_api();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let server = tokio::spawn(api::serve(Arc::new(api), listener, 4, async {
            let _ = rx.await;
        }));
        let url = format!("http://{addr}/works?filter=publication_year:2022");
        let resp = tokio::task::spawn_blocking(move || {
            let mut r = ureq::get(&url).header("Origin", "http://example.test").call().unwrap();
            let cors = r.headers().get("access-control-allow-origin").map(|h| h.to_str().unwrap().to_owned());
            (cors, r.body_mut().read_to_string().unwrap())
        })
        .await
        .unwrap();
        assert_eq!(resp.0.as_deref(), Some("*"));
        let v: Value = serde_json::from_str(&resp.1).unwrap();
        assert_eq!(v["meta"]["count"], 3);
        tx.send(()).unwrap();
        server.await.unwrap().unwrap();
    });
}
