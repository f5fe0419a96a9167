//! Read-only HTTP/JSON API.
//!
//! `GET /` → kinds and counts; `GET /{kind}` → filtered list;
//! `GET /{kind}/{key}` → one record by OpenAlex id (short or URL form) or a
//! namespaced external id (`doi:`, `orcid:`, `issn:`, `ror:`, `wikidata:`).
//!
//! [`handle`] is a pure function of the store snapshot and the request, so
//! equal requests against an unchanged store produce equal bytes.

use std::future::Future;
use std::io;
use std::pin::Pin;
use std::sync::Arc;
use std::task::{Context, Poll};

use axum::body::Body;
use axum::extract::State as AxumState;
use axum::http::{header, HeaderValue, Method, Request, StatusCode};
use axum::response::Response;
use axum::Router;
use percent_encoding::percent_decode_str;
use serde_json::{json, Value};
use tokio::io::{AsyncRead, AsyncWrite, ReadBuf};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{OwnedSemaphorePermit, Semaphore};
use tower_http::cors::{Any, CorsLayer};

use crate::identifiers::{normalize_doi, validate_issn, validate_orcid, validate_ror, validate_wikidata, IssnLinkingTable};
use crate::model::{Entity, EntityKind, OpenAlexId};
use crate::store::query::{DEFAULT_PER_PAGE, MAX_PER_PAGE};
use crate::store::{Filter, ListQuery, Paging, Sort, Store};

pub const CONTENT_TYPE: &str = "application/json; charset=utf-8";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiConfig {
    /// Prefix for the top-level `id` of every emitted record.
    pub base_url: String,
    pub default_per_page: usize,
    pub max_per_page: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self { base_url: "https://openalex.org".into(), default_per_page: DEFAULT_PER_PAGE, max_per_page: MAX_PER_PAGE }
    }
}

/// Everything a request needs.
pub struct Api {
    pub store: Arc<Store>,
    pub config: ApiConfig,
    pub issn_table: IssnLinkingTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: String,
}

fn error(status: u16, code: &str, message: impl Into<String>) -> ApiResponse {
    let body = json!({ "error": code, "message": message.into() });
    ApiResponse { status, body: body.to_string() }
}

fn bad_request(message: impl Into<String>) -> ApiResponse {
    error(400, "bad_request", message)
}

fn namespace_kind(ns: &str) -> Option<EntityKind> {
    match ns {
        "doi" => Some(EntityKind::Work),
        "orcid" => Some(EntityKind::Author),
        "issn" => Some(EntityKind::Venue),
        "ror" => Some(EntityKind::Institution),
        "wikidata" => Some(EntityKind::Concept),
        _ => None,
    }
}

impl Api {
    pub fn new(store: Arc<Store>, config: ApiConfig) -> Self {
        Self { store, config, issn_table: IssnLinkingTable::new() }
    }

    /// Render a record with its top-level `id` under `base_url`.
    pub fn render(&self, e: &Entity) -> Value {
        let mut v = e.to_record_value();
        if let Some(obj) = v.as_object_mut() {
            obj.insert("id".into(), Value::String(format!("{}/{}", self.config.base_url.trim_end_matches('/'), e.id().short())));
        }
        v
    }

    /// Serve one request. `path` is the raw (percent-encoded) URI path.
    pub fn handle(&self, method: &str, path: &str, query: Option<&str>) -> ApiResponse {
        if method != "GET" && method != "HEAD" {
            return error(405, "method_not_allowed", format!("{method} is not supported; the API is read-only"));
        }
        let trimmed = path.trim_matches('/');
        if trimmed.is_empty() {
            return self.root();
        }
        let (kind_seg, key) = match trimmed.split_once('/') {
            Some((k, rest)) => (k, Some(rest)),
            None => (trimmed, None),
        };
        let Some(kind) = EntityKind::from_plural(kind_seg) else {
            return error(404, "not_found", format!("unknown entity kind {kind_seg:?}"));
        };
        match key {
            None => self.list(kind, query.unwrap_or("")),
            Some(raw) => {
                let key = match percent_decode_str(raw).decode_utf8() {
                    Ok(k) => k.into_owned(),
                    Err(_) => return bad_request("key is not valid UTF-8"),
                };
                self.get(kind, &key)
            }
        }
    }

    fn root(&self) -> ApiResponse {
        let state = self.store.read();
        let body = json!({
            "kinds": EntityKind::ALL.iter().map(|k| k.plural()).collect::<Vec<_>>(),
            "counts": state.counts(),
            "version": env!("CARGO_PKG_VERSION"),
            "dump_created_date": state.dump_created_date(),
        });
        ApiResponse { status: 200, body: body.to_string() }
    }

    fn lookup(&self, kind: EntityKind, key: &str) -> Result<Option<Entity>, ApiResponse> {
        if let Ok(id) = OpenAlexId::parse(key) {
            if id.kind() != kind {
                return Err(bad_request(format!("{} is a {} id, not a {kind} id", id.short(), id.kind())));
            }
            return Ok(self.store.get(id));
        }
        let Some((ns, value)) = key.split_once(':') else {
            return Err(bad_request(format!("malformed key {key:?}")));
        };
        let ns = ns.to_ascii_lowercase();
        let Some(ns_kind) = namespace_kind(&ns) else {
            return Err(bad_request(format!("unknown namespace {ns:?}")));
        };
        if ns_kind != kind {
            return Err(bad_request(format!("namespace {ns}: identifies {} records, not {}", ns_kind.plural(), kind.plural())));
        }
        let bad = |e: crate::identifiers::IdError| bad_request(e.to_string());
        let state = self.store.read();
        let found = match ns.as_str() {
            "doi" => state.by_ceid(kind, normalize_doi(value).map_err(bad)?.as_str()).cloned(),
            "orcid" => state.by_ceid(kind, validate_orcid(value).map_err(bad)?.as_str()).cloned(),
            "ror" => state.by_ceid(kind, validate_ror(value).map_err(bad)?.as_str()).cloned(),
            "wikidata" => state.by_ceid(kind, validate_wikidata(value).map_err(bad)?.as_str()).cloned(),
            _ => {
                let issn = validate_issn(value).map_err(bad)?;
                let issn_l = self.issn_table.issn_l_of(&issn);
                state.by_ceid(kind, issn_l.as_str()).cloned().or_else(|| {
                    state
                        .iter(EntityKind::Venue)
                        .find(|e| matches!(e, Entity::Venue(v) if v.issns.contains(&issn)))
                        .cloned()
                })
            }
        };
        Ok(found)
    }

    fn get(&self, kind: EntityKind, key: &str) -> ApiResponse {
        match self.lookup(kind, key) {
            Err(r) => r,
            Ok(None) => error(404, "not_found", format!("no {kind} {key}")),
            Ok(Some(e)) => ApiResponse { status: 200, body: self.render(&e).to_string() },
        }
    }

    fn list(&self, kind: EntityKind, query: &str) -> ApiResponse {
        let mut filter = Filter::default();
        let mut sort = Sort::default();
        let mut page = None;
        let mut per_page = self.config.default_per_page;
        let mut cursor = None;
        for (k, v) in url::form_urlencoded::parse(query.as_bytes()) {
            let parsed = match k.as_ref() {
                "filter" => Filter::parse(kind, &v).map(|f| filter.conjuncts.extend(f.conjuncts)).map_err(|e| e.to_string()),
                "sort" => Sort::parse(kind, &v).map(|s| sort = s).map_err(|e| e.to_string()),
                "page" => v.parse().map(|p| page = Some(p)).map_err(|_| format!("page {v:?} is not a positive integer")),
                "per-page" | "per_page" => {
                    v.parse().map(|p| per_page = p).map_err(|_| format!("per-page {v:?} is not a positive integer"))
                }
                "cursor" => {
                    cursor = Some(v.into_owned());
                    Ok(())
                }
                _ => Ok(()),
            };
            if let Err(message) = parsed {
                return bad_request(message);
            }
        }
        let paging = match (cursor, page) {
            (Some(_), Some(_)) => return bad_request("use either page or cursor, not both"),
            (Some(c), None) => Paging::Cursor { token: (c != "*").then_some(c), per_page },
            (None, p) => Paging::Offset { page: p.unwrap_or(1), per_page },
        };
        let q = ListQuery { filter, sort, paging, max_per_page: Some(self.config.max_per_page) };
        match self.store.list(kind, &q) {
            Err(e) => bad_request(e.to_string()),
            Ok(r) => {
                let body = json!({
                    "meta": {
                        "count": r.count,
                        "page": r.page,
                        "per_page": r.per_page,
                        "next_cursor": r.next_cursor,
                    },
                    "results": r.records.iter().map(|e| self.render(e)).collect::<Vec<_>>(),
                });
                ApiResponse { status: 200, body: body.to_string() }
            }
        }
    }
}

async fn dispatch(AxumState(api): AxumState<Arc<Api>>, req: Request<Body>) -> Response {
    let method = req.method().as_str().to_owned();
    let path = req.uri().path().to_owned();
    let query = req.uri().query().map(str::to_owned);
    let api2 = api.clone();
    let r = tokio::task::spawn_blocking(move || api2.handle(&method, &path, query.as_deref()))
        .await
        .unwrap_or_else(|e| error(500, "internal", e.to_string()));
    let is_head = req.method() == Method::HEAD;
    let mut resp = Response::new(if is_head { Body::empty() } else { Body::from(r.body) });
    *resp.status_mut() = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static(CONTENT_TYPE));
    resp
}

pub fn router(api: Arc<Api>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::HEAD, Method::OPTIONS])
        .allow_headers(Any);
    Router::new().fallback(dispatch).with_state(api).layer(cors)
}

/// A listener that stops accepting while `max` connections are open.
pub struct CappedListener {
    inner: TcpListener,
    permits: Arc<Semaphore>,
}

impl CappedListener {
    pub fn new(inner: TcpListener, max: usize) -> Self {
        Self { inner, permits: Arc::new(Semaphore::new(max.max(1))) }
    }
}

/// A connection holding one slot of the cap until dropped.
pub struct CappedStream {
    io: TcpStream,
    _permit: OwnedSemaphorePermit,
}

impl AsyncRead for CappedStream {
    fn poll_read(mut self: Pin<&mut Self>, cx: &mut Context<'_>, buf: &mut ReadBuf<'_>) -> Poll<io::Result<()>> {
        Pin::new(&mut self.io).poll_read(cx, buf)
    }
}

impl AsyncWrite for CappedStream {
    fn poll_write(mut self: Pin<&mut Self>, cx: &mut Context<'_>, buf: &[u8]) -> Poll<io::Result<usize>> {
        Pin::new(&mut self.io).poll_write(cx, buf)
    }
    fn poll_flush(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<io::Result<()>> {
        Pin::new(&mut self.io).poll_flush(cx)
    }
    fn poll_shutdown(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<io::Result<()>> {
        Pin::new(&mut self.io).poll_shutdown(cx)
    }
}

impl axum::serve::Listener for CappedListener {
    type Io = CappedStream;
    type Addr = std::net::SocketAddr;

    async fn accept(&mut self) -> (Self::Io, Self::Addr) {
        let permit = self.permits.clone().acquire_owned().await.expect("semaphore is never closed");
        loop {
            match self.inner.accept().await {
                Ok((io, addr)) => return (CappedStream { io, _permit: permit }, addr),
                Err(_) => tokio::time::sleep(std::time::Duration::from_millis(50)).await,
            }
        }
    }

    fn local_addr(&self) -> io::Result<Self::Addr> {
        self.inner.local_addr()
    }
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    api: Arc<Api>,
    listener: TcpListener,
    max_connections: usize,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(CappedListener::new(listener, max_connections), router(api)).with_graceful_shutdown(shutdown).await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Clock, StoreOptions};

    fn api() -> (tempfile::TempDir, Api) {
        let dir = tempfile::tempdir().unwrap();
        let opts = StoreOptions { sync: false, clock: Clock::Fixed(chrono::NaiveDate::from_ymd_opt(2022, 1, 1).unwrap()), ..Default::default() };
        let store = Arc::new(Store::open_with(dir.path(), opts).unwrap());
        (dir, Api::new(store, ApiConfig::default()))
    }

    #[test]
    fn root_on_empty_store() {
        let (_d, api) = api();
        let r = api.handle("GET", "/", None);
        assert_eq!(r.status, 200);
        let v: Value = serde_json::from_str(&r.body).unwrap();
        assert_eq!(v["counts"]["works"], 0);
        assert_eq!(v["kinds"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn namespace_mismatch_is_400() {
        let (_d, api) = api();
        let r = api.handle("GET", "/authors/doi:10.1/x", None);
        assert_eq!(r.status, 400);
        let v: Value = serde_json::from_str(&r.body).unwrap();
        assert_eq!(v["error"], "bad_request");
        assert_eq!(api.handle("GET", "/works/A1", None).status, 400);
        assert_eq!(api.handle("GET", "/works/W999", None).status, 404);
        assert_eq!(api.handle("POST", "/works", None).status, 405);
    }

    #[test]
    fn filter_errors_name_the_token() {
        let (_d, api) = api();
        let r = api.handle("GET", "/works", Some("filter=colour:blue"));
        assert_eq!(r.status, 400);
        assert!(r.body.contains("colour"));
        assert_eq!(api.handle("GET", "/works", Some("per-page=201")).status, 400);
        assert_eq!(api.handle("GET", "/works", Some("page=401&per-page=25")).status, 400);
    }
}
