//! Filtered, sorted listing with offset or keyset-cursor paging.
//!
//! Filter grammar: `attr:value[|value...][,attr:value...]`, conjuncts ANDed,
//! pipe-separated values ORed. Cursor tokens encode the last visited sort
//! key and serial, so a walk never repeats or skips a record whose sort key
//! does not change.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{normalize_ceid, State};
use crate::model::{Entity, EntityKind, OpenAlexId, VenueType, WorkType};

pub const DEFAULT_PER_PAGE: usize = 25;
pub const MAX_PER_PAGE: usize = 200;
/// Deepest record reachable by offset paging.
pub const MAX_OFFSET_RESULTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown filter attribute {0:?}")]
    UnknownAttribute(String),
    #[error("malformed filter conjunct {0:?}")]
    Malformed(String),
    #[error("bad value {value:?} for {attr}: {reason}")]
    BadValue { attr: String, value: String, reason: String },
    #[error("unknown sort field {0:?}")]
    BadSort(String),
    #[error("invalid cursor {0:?}")]
    BadCursor(String),
    #[error("per-page must be between 1 and {max}, got {got}")]
    PerPage { got: usize, max: usize },
    #[error("page must be at least 1")]
    ZeroPage,
    #[error("offset paging is limited to the first {MAX_OFFSET_RESULTS} results; use cursor paging")]
    TooDeep,
}

/// Filterable attributes per kind.
pub fn filter_attributes(kind: EntityKind) -> &'static [&'static str] {
    match kind {
        EntityKind::Work => &[
            "publication_year",
            "work_type",
            "doi",
            "authorships.author",
            "authorships.institutions",
            "locations.venue",
            "concepts.id",
            "has_doi",
        ],
        EntityKind::Author => &["orcid", "display_name", "has_orcid"],
        EntityKind::Venue => &["issn_l", "venue_type"],
        EntityKind::Institution => &["ror", "country_code"],
        EntityKind::Concept => &["level", "wikidata", "parents"],
    }
}

pub fn sort_fields(kind: EntityKind) -> &'static [&'static str] {
    match kind {
        EntityKind::Work => &["id", "publication_year", "cited_by_count"],
        EntityKind::Author => &["id", "display_name", "works_count", "cited_by_count"],
        EntityKind::Venue | EntityKind::Institution => &["id", "display_name", "works_count"],
        EntityKind::Concept => &["id", "level", "display_name", "works_count"],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conjunct {
    pub attr: String,
    /// Canonical string forms; a record matches if any attribute value equals any of these.
    pub values: Vec<String>,
}

/// Conjunction of one-of predicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Filter {
    pub conjuncts: Vec<Conjunct>,
}

fn id_value(kind: EntityKind, attr: &str, v: &str) -> Result<String, QueryError> {
    let bad = |reason: String| QueryError::BadValue { attr: attr.into(), value: v.into(), reason };
    let id = OpenAlexId::parse(v).map_err(|e| bad(e.to_string()))?;
    if id.kind() != kind {
        return Err(bad(format!("expected a {kind} id")));
    }
    Ok(id.short())
}

fn canonical_value(kind: EntityKind, attr: &str, v: &str) -> Result<String, QueryError> {
    let bad = |reason: String| QueryError::BadValue { attr: attr.into(), value: v.into(), reason };
    match (kind, attr) {
        (EntityKind::Work, "publication_year") => v.parse::<i32>().map(|y| y.to_string()).map_err(|e| bad(e.to_string())),
        (EntityKind::Work, "work_type") => {
            WorkType::parse(v).map(|t| t.as_str().to_owned()).ok_or_else(|| bad("unknown work type".into()))
        }
        (EntityKind::Work, "doi") => normalize_ceid(EntityKind::Work, v).map_err(|e| bad(e.to_string())),
        (EntityKind::Work, "authorships.author") => id_value(EntityKind::Author, attr, v),
        (EntityKind::Work, "authorships.institutions") => id_value(EntityKind::Institution, attr, v),
        (EntityKind::Work, "locations.venue") => id_value(EntityKind::Venue, attr, v),
        (EntityKind::Work, "concepts.id") | (EntityKind::Concept, "parents") => id_value(EntityKind::Concept, attr, v),
        (_, "has_doi" | "has_orcid") => match v {
            "true" | "false" => Ok(v.to_owned()),
            _ => Err(bad("expected true or false".into())),
        },
        (EntityKind::Author, "orcid") => normalize_ceid(EntityKind::Author, v).map_err(|e| bad(e.to_string())),
        (EntityKind::Author, "display_name") => Ok(v.to_owned()),
        (EntityKind::Venue, "issn_l") => normalize_ceid(EntityKind::Venue, v).map_err(|e| bad(e.to_string())),
        (EntityKind::Venue, "venue_type") => {
            VenueType::parse(v).map(|_| v.to_owned()).ok_or_else(|| bad("unknown venue type".into()))
        }
        (EntityKind::Institution, "ror") => normalize_ceid(EntityKind::Institution, v).map_err(|e| bad(e.to_string())),
        (EntityKind::Institution, "country_code") => {
            if v.len() == 2 && v.bytes().all(|b| b.is_ascii_alphabetic()) {
                Ok(v.to_ascii_uppercase())
            } else {
                Err(bad("expected a 2-letter code".into()))
            }
        }
        (EntityKind::Concept, "level") => v.parse::<u8>().map(|l| l.to_string()).map_err(|e| bad(e.to_string())),
        (EntityKind::Concept, "wikidata") => normalize_ceid(EntityKind::Concept, v).map_err(|e| bad(e.to_string())),
        _ => Err(QueryError::UnknownAttribute(attr.to_owned())),
    }
}

/// The canonical strings a record exposes for `attr`.
pub fn attribute_values(e: &Entity, attr: &str) -> Vec<String> {
    match (e, attr) {
        (Entity::Work(w), "publication_year") => w.publication_year.iter().map(|y| y.to_string()).collect(),
        (Entity::Work(w), "work_type") => vec![w.work_type.as_str().to_owned()],
        (Entity::Work(w), "doi") => w.doi.iter().map(|d| d.as_str().to_owned()).collect(),
        (Entity::Work(w), "authorships.author") => w.authorships.iter().map(|a| a.author.short()).collect(),
        (Entity::Work(w), "authorships.institutions") => {
            w.authorships.iter().flat_map(|a| a.institutions.iter().map(|i| i.short())).collect()
        }
        (Entity::Work(w), "locations.venue") => w.locations.iter().filter_map(|l| l.venue.map(|v| v.short())).collect(),
        (Entity::Work(w), "concepts.id") => w.concepts.iter().map(|c| c.id.short()).collect(),
        (Entity::Work(w), "has_doi") => vec![w.doi.is_some().to_string()],
        (Entity::Author(a), "orcid") => a.orcid.iter().map(|o| o.as_str().to_owned()).collect(),
        (Entity::Author(a), "display_name") => vec![a.display_name.clone()],
        (Entity::Author(a), "has_orcid") => vec![a.orcid.is_some().to_string()],
        (Entity::Venue(v), "issn_l") => v.issn_l.iter().map(|i| i.as_str().to_owned()).collect(),
        (Entity::Venue(v), "venue_type") => {
            vec![serde_json::to_value(v.venue_type).ok().and_then(|x| x.as_str().map(str::to_owned)).unwrap_or_default()]
        }
        (Entity::Institution(i), "ror") => i.ror.iter().map(|r| r.as_str().to_owned()).collect(),
        (Entity::Institution(i), "country_code") => i.country_code.iter().cloned().collect(),
        (Entity::Concept(c), "level") => vec![c.level.to_string()],
        (Entity::Concept(c), "wikidata") => vec![c.wikidata.as_str().to_owned()],
        (Entity::Concept(c), "parents") => c.parents.iter().map(|p| p.short()).collect(),
        _ => Vec::new(),
    }
}

impl Filter {
    pub fn parse(kind: EntityKind, text: &str) -> Result<Self, QueryError> {
        let mut conjuncts = Vec::new();
        for token in text.split(',') {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            let (attr, raw) = token.split_once(':').ok_or_else(|| QueryError::Malformed(token.to_owned()))?;
            let attr = attr.trim();
            if !filter_attributes(kind).contains(&attr) {
                return Err(QueryError::UnknownAttribute(attr.to_owned()));
            }
            let values = raw
                .split('|')
                .map(|v| {
                    let v = v.trim();
                    if v.is_empty() {
                        Err(QueryError::Malformed(token.to_owned()))
                    } else {
                        canonical_value(kind, attr, v)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            conjuncts.push(Conjunct { attr: attr.to_owned(), values });
        }
        Ok(Self { conjuncts })
    }

    pub fn matches(&self, e: &Entity) -> bool {
        self.conjuncts.iter().all(|c| attribute_values(e, &c.attr).iter().any(|v| c.values.contains(v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortDir {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sort {
    pub field: String,
    pub dir: SortDir,
}

impl Default for Sort {
    fn default() -> Self {
        Self { field: "id".into(), dir: SortDir::Asc }
    }
}

impl Sort {
    /// `field` or `field:asc|desc`.
    pub fn parse(kind: EntityKind, text: &str) -> Result<Self, QueryError> {
        let (field, dir) = match text.split_once(':') {
            Some((f, "asc")) => (f, SortDir::Asc),
            Some((f, "desc")) => (f, SortDir::Desc),
            Some(_) => return Err(QueryError::BadSort(text.to_owned())),
            None => (text, SortDir::Asc),
        };
        if !sort_fields(kind).contains(&field) {
            return Err(QueryError::BadSort(text.to_owned()));
        }
        Ok(Self { field: field.to_owned(), dir })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
enum SortKey {
    Null,
    Int(i64),
    Str(String),
}

fn sort_key(e: &Entity, field: &str) -> SortKey {
    let int = |v: u64| SortKey::Int(i64::try_from(v).unwrap_or(i64::MAX));
    match (e, field) {
        (_, "id") => SortKey::Null,
        (Entity::Work(w), "publication_year") => w.publication_year.map_or(SortKey::Null, |y| SortKey::Int(y.into())),
        (Entity::Work(w), "cited_by_count") => int(w.cited_by_count),
        (Entity::Author(a), "cited_by_count") => int(a.cited_by_count),
        (Entity::Author(a), "works_count") => int(a.works_count),
        (Entity::Author(a), "display_name") => SortKey::Str(a.display_name.clone()),
        (Entity::Venue(v), "works_count") => int(v.works_count),
        (Entity::Venue(v), "display_name") => SortKey::Str(v.display_name.clone()),
        (Entity::Institution(i), "works_count") => int(i.works_count),
        (Entity::Institution(i), "display_name") => SortKey::Str(i.display_name.clone()),
        (Entity::Concept(c), "works_count") => int(c.works_count),
        (Entity::Concept(c), "display_name") => SortKey::Str(c.display_name.clone()),
        (Entity::Concept(c), "level") => SortKey::Int(c.level.into()),
        _ => SortKey::Null,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Paging {
    Offset { page: usize, per_page: usize },
    /// `None` starts a walk (the `*` token).
    Cursor { token: Option<String>, per_page: usize },
}

impl Default for Paging {
    fn default() -> Self {
        Paging::Offset { page: 1, per_page: DEFAULT_PER_PAGE }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ListQuery {
    pub filter: Filter,
    pub sort: Sort,
    pub paging: Paging,
    pub max_per_page: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListResult {
    pub records: Vec<Entity>,
    pub count: usize,
    pub page: Option<usize>,
    pub per_page: usize,
    pub next_cursor: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CursorState {
    /// Hash of filter + sort, so a token cannot be replayed on another query.
    q: u64,
    k: SortKey,
    s: u64,
}

fn query_hash(kind: EntityKind, q: &ListQuery) -> u64 {
    // FNV-1a over a canonical rendering; stable across processes.
    let mut text = format!("{kind}|{}|{:?}", q.sort.field, q.sort.dir);
    for c in &q.filter.conjuncts {
        text.push_str(&format!("|{}={}", c.attr, c.values.join("|")));
    }
    text.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100000001b3))
}

fn encode_cursor(c: &CursorState) -> String {
    URL_SAFE_NO_PAD.encode(serde_json::to_vec(c).expect("cursor serializes"))
}

fn decode_cursor(token: &str) -> Option<CursorState> {
    serde_json::from_slice(&URL_SAFE_NO_PAD.decode(token).ok()?).ok()
}

pub fn list_entities(state: &State, kind: EntityKind, q: &ListQuery) -> Result<ListResult, QueryError> {
    let max = q.max_per_page.unwrap_or(MAX_PER_PAGE);
    let per_page = match q.paging {
        Paging::Offset { per_page, .. } | Paging::Cursor { per_page, .. } => per_page,
    };
    if per_page == 0 || per_page > max {
        return Err(QueryError::PerPage { got: per_page, max });
    }
    for c in &q.filter.conjuncts {
        if !filter_attributes(kind).contains(&c.attr.as_str()) {
            return Err(QueryError::UnknownAttribute(c.attr.clone()));
        }
    }
    if !sort_fields(kind).contains(&q.sort.field.as_str()) {
        return Err(QueryError::BadSort(q.sort.field.clone()));
    }

    let mut hits: Vec<(SortKey, u64, &Entity)> = state
        .iter(kind)
        .filter(|e| q.filter.matches(e))
        .map(|e| (sort_key(e, &q.sort.field), e.id().serial(), e))
        .collect();
    hits.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    if q.sort.dir == SortDir::Desc {
        hits.reverse();
    }
    let count = hits.len();

    match &q.paging {
        Paging::Offset { page, .. } => {
            if *page == 0 {
                return Err(QueryError::ZeroPage);
            }
            let end = page.saturating_mul(per_page);
            if end > MAX_OFFSET_RESULTS {
                return Err(QueryError::TooDeep);
            }
            let start = end - per_page;
            let records = hits.iter().skip(start).take(per_page).map(|h| h.2.clone()).collect();
            Ok(ListResult { records, count, page: Some(*page), per_page, next_cursor: None })
        }
        Paging::Cursor { token, .. } => {
            let qh = query_hash(kind, q);
            let start = match token {
                None => 0,
                Some(t) => {
                    let c = decode_cursor(t).filter(|c| c.q == qh).ok_or_else(|| QueryError::BadCursor(t.clone()))?;
                    let after = |h: &(SortKey, u64, &Entity)| {
                        let ord = (&h.0, h.1).cmp(&(&c.k, c.s));
                        match q.sort.dir {
                            SortDir::Asc => ord.is_gt(),
                            SortDir::Desc => ord.is_lt(),
                        }
                    };
                    hits.partition_point(|h| !after(h))
                }
            };
            let page: Vec<_> = hits[start..].iter().take(per_page).collect();
            let next_cursor = if start + page.len() < hits.len() {
                page.last().map(|h| encode_cursor(&CursorState { q: qh, k: h.0.clone(), s: h.1 }))
            } else {
                None
            };
            Ok(ListResult {
                records: page.into_iter().map(|h| h.2.clone()).collect(),
                count,
                page: None,
                per_page,
                next_cursor,
            })
        }
    }
}
