//! Entity types of the scholarly graph and the OpenAlex ID grammar.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identifiers::{Doi, Issn, Orcid, Ror, WikidataId};

pub const ID_URL_PREFIX: &str = "https://openalex.org/";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Work,
    Author,
    Venue,
    Institution,
    Concept,
}

impl EntityKind {
    pub const ALL: [EntityKind; 5] =
        [EntityKind::Work, EntityKind::Author, EntityKind::Venue, EntityKind::Institution, EntityKind::Concept];

    pub fn letter(self) -> char {
        match self {
            EntityKind::Work => 'W',
            EntityKind::Author => 'A',
            EntityKind::Venue => 'V',
            EntityKind::Institution => 'I',
            EntityKind::Concept => 'C',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'W' => Some(EntityKind::Work),
            'A' => Some(EntityKind::Author),
            'V' => Some(EntityKind::Venue),
            'I' => Some(EntityKind::Institution),
            'C' => Some(EntityKind::Concept),
            _ => None,
        }
    }

    /// Plural path segment used by dumps and the API (`works`, `authors`, ...).
    pub fn plural(self) -> &'static str {
        match self {
            EntityKind::Work => "works",
            EntityKind::Author => "authors",
            EntityKind::Venue => "venues",
            EntityKind::Institution => "institutions",
            EntityKind::Concept => "concepts",
        }
    }

    pub fn from_plural(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.plural() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Work => "work",
            EntityKind::Author => "author",
            EntityKind::Venue => "venue",
            EntityKind::Institution => "institution",
            EntityKind::Concept => "concept",
        })
    }
}

/// Typed primary key: entity kind plus a serial ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpenAlexId {
    kind: EntityKind,
    serial: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdParseError {
    #[error("empty id")]
    Empty,
    #[error("unknown kind letter {0:?}")]
    UnknownKind(char),
    #[error("serial {0:?} is not a positive decimal integer")]
    BadSerial(String),
    #[error("serial must be at least 1")]
    ZeroSerial,
    #[error("malformed URL host in {0:?}")]
    BadHost(String),
}

impl OpenAlexId {
    pub fn new(kind: EntityKind, serial: u64) -> Option<Self> {
        (serial >= 1).then_some(Self { kind, serial })
    }

    pub fn kind(self) -> EntityKind {
        self.kind
    }

    pub fn serial(self) -> u64 {
        self.serial
    }

    pub fn short(self) -> String {
        format!("{}{}", self.kind.letter(), self.serial)
    }

    pub fn url(self) -> String {
        format!("{ID_URL_PREFIX}{}", self.short())
    }

    /// `(short, url)` canonical forms.
    pub fn canonical_forms(self) -> (String, String) {
        (self.short(), self.url())
    }

    /// Accepts `W123`, `w123`, `https://openalex.org/W123` and the same URL
    /// with a trailing slash.
    pub fn parse(text: &str) -> Result<Self, IdParseError> {
        let text = text.trim();
        let short = if let Some(rest) = strip_scheme(text) {
            let rest = rest.strip_suffix('/').unwrap_or(rest);
            let (host, path) = rest.split_once('/').ok_or_else(|| IdParseError::BadHost(text.to_owned()))?;
            if !host.eq_ignore_ascii_case("openalex.org") || path.contains('/') {
                return Err(IdParseError::BadHost(text.to_owned()));
            }
            path
        } else {
            text
        };
        let mut chars = short.chars();
        let letter = chars.next().ok_or(IdParseError::Empty)?;
        let kind = EntityKind::from_letter(letter).ok_or(IdParseError::UnknownKind(letter))?;
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IdParseError::BadSerial(digits.to_owned()));
        }
        let serial: u64 = digits.parse().map_err(|_| IdParseError::BadSerial(digits.to_owned()))?;
        if serial == 0 {
            return Err(IdParseError::ZeroSerial);
        }
        Ok(Self { kind, serial })
    }
}

fn strip_scheme(text: &str) -> Option<&str> {
    for scheme in ["https://", "http://"] {
        if text.len() >= scheme.len() && text[..scheme.len()].eq_ignore_ascii_case(scheme) {
            return Some(&text[scheme.len()..]);
        }
    }
    None
}

impl fmt::Display for OpenAlexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.letter(), self.serial)
    }
}

impl FromStr for OpenAlexId {
    type Err = IdParseError;
    fn from_str(s: &str) -> Result<Self, IdParseError> {
        Self::parse(s)
    }
}

impl Serialize for OpenAlexId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.url())
    }
}

impl<'de> Deserialize<'de> for OpenAlexId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{0} id allocator exhausted")]
pub struct AllocatorExhausted(pub EntityKind);

/// Last issued serial per kind. Increments are atomic.
#[derive(Debug, Default)]
pub struct IdAllocator {
    last: [AtomicU64; 5],
}

impl IdAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_last(last: [u64; 5]) -> Self {
        Self { last: last.map(AtomicU64::new) }
    }

    pub fn mint(&self, kind: EntityKind) -> Result<OpenAlexId, AllocatorExhausted> {
        let prev = self.last[kind.index()]
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |v| v.checked_add(1))
            .map_err(|_| AllocatorExhausted(kind))?;
        Ok(OpenAlexId { kind, serial: prev + 1 })
    }

    pub fn last(&self, kind: EntityKind) -> u64 {
        self.last[kind.index()].load(Ordering::SeqCst)
    }

    pub fn snapshot(&self) -> [u64; 5] {
        EntityKind::ALL.map(|k| self.last(k))
    }

    /// Raise the counter so the next mint is past `serial`.
    pub fn observe(&self, id: OpenAlexId) {
        self.last[id.kind.index()].fetch_max(id.serial, Ordering::SeqCst);
    }

    pub fn raise_to(&self, last: [u64; 5]) {
        for (slot, v) in self.last.iter().zip(last) {
            slot.fetch_max(v, Ordering::SeqCst);
        }
    }
}

impl Clone for IdAllocator {
    fn clone(&self) -> Self {
        Self::from_last(self.snapshot())
    }
}

// ---------------------------------------------------------------- enums

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkType {
    JournalArticle,
    Book,
    Dataset,
    Thesis,
    Other,
}

impl WorkType {
    pub const ALL: [WorkType; 5] =
        [WorkType::JournalArticle, WorkType::Book, WorkType::Dataset, WorkType::Thesis, WorkType::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            WorkType::JournalArticle => "journal-article",
            WorkType::Book => "book",
            WorkType::Dataset => "dataset",
            WorkType::Thesis => "thesis",
            WorkType::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Version {
    #[serde(rename = "publishedVersion")]
    Published,
    #[serde(rename = "acceptedVersion")]
    Accepted,
    #[serde(rename = "submittedVersion")]
    Submitted,
    #[serde(rename = "unknown")]
    Unknown,
}

impl Version {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "publishedVersion" => Some(Version::Published),
            "acceptedVersion" => Some(Version::Accepted),
            "submittedVersion" => Some(Version::Submitted),
            "unknown" => Some(Version::Unknown),
            _ => None,
        }
    }

    /// Higher is preferred when picking the primary location.
    pub fn rank(self) -> u8 {
        match self {
            Version::Published => 3,
            Version::Accepted => 2,
            Version::Submitted => 1,
            Version::Unknown => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    First,
    Middle,
    Last,
}

impl Position {
    pub fn for_index(index: usize, len: usize) -> Self {
        if index == 0 {
            Position::First
        } else if index + 1 == len {
            Position::Last
        } else {
            Position::Middle
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VenueType {
    Journal,
    Conference,
    Repository,
}

impl VenueType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "journal" => Some(VenueType::Journal),
            "conference" => Some(VenueType::Conference),
            "repository" => Some(VenueType::Repository),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Crossref,
    Pubmed,
    Repository,
}

impl SourceKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "crossref" => Some(SourceKind::Crossref),
            "pubmed" => Some(SourceKind::Pubmed),
            "repository" => Some(SourceKind::Repository),
            _ => None,
        }
    }

    /// Precedence for field overwrites: crossref > pubmed > repository.
    pub fn rank(self) -> u8 {
        match self {
            SourceKind::Crossref => 3,
            SourceKind::Pubmed => 2,
            SourceKind::Repository => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Crossref => "crossref",
            SourceKind::Pubmed => "pubmed",
            SourceKind::Repository => "repository",
        }
    }
}

// ---------------------------------------------------------------- records

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Authorship {
    pub author: OpenAlexId,
    pub institutions: Vec<OpenAlexId>,
    pub raw_author_name: String,
    pub raw_affiliation_strings: Vec<String>,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostLocation {
    pub venue: Option<OpenAlexId>,
    pub url: Option<String>,
    pub version: Version,
    pub license: Option<String>,
    pub primary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptAssignment {
    pub id: OpenAlexId,
    pub score: f64,
    pub inherited: bool,
}

/// One source record that contributed to a work.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceRef {
    pub source: SourceKind,
    pub source_record_id: String,
    pub retrieved_date: NaiveDate,
}

impl SourceRef {
    /// Field-overwrite precedence key: source class first, then date.
    pub fn precedence(&self) -> (u8, NaiveDate) {
        (self.source.rank(), self.retrieved_date)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Work {
    pub id: OpenAlexId,
    pub doi: Option<Doi>,
    pub title: Option<String>,
    pub r#abstract: Option<String>,
    pub publication_year: Option<i32>,
    pub work_type: WorkType,
    pub authorships: Vec<Authorship>,
    pub locations: Vec<HostLocation>,
    pub concepts: Vec<ConceptAssignment>,
    pub referenced_works: Vec<OpenAlexId>,
    pub unresolved_references: Vec<Doi>,
    pub cited_by_count: u64,
    pub sources: Vec<SourceRef>,
    pub created_date: NaiveDate,
    pub updated_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Author {
    pub id: OpenAlexId,
    pub orcid: Option<Orcid>,
    pub display_name: String,
    pub alternate_names: Vec<String>,
    pub works_count: u64,
    pub cited_by_count: u64,
    pub created_date: NaiveDate,
    pub updated_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Venue {
    pub id: OpenAlexId,
    pub issn_l: Option<Issn>,
    pub issns: Vec<Issn>,
    pub display_name: String,
    pub venue_type: VenueType,
    pub works_count: u64,
    pub created_date: NaiveDate,
    pub updated_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Institution {
    pub id: OpenAlexId,
    pub ror: Option<Ror>,
    pub display_name: String,
    pub aliases: Vec<String>,
    pub country_code: Option<String>,
    pub works_count: u64,
    pub created_date: NaiveDate,
    pub updated_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: OpenAlexId,
    pub wikidata: WikidataId,
    pub display_name: String,
    pub level: u8,
    pub parents: Vec<OpenAlexId>,
    pub keywords: Vec<String>,
    pub works_count: u64,
    pub created_date: NaiveDate,
    pub updated_date: NaiveDate,
}

/// Any of the five entity records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "record", rename_all = "lowercase")]
pub enum Entity {
    Work(Work),
    Author(Author),
    Venue(Venue),
    Institution(Institution),
    Concept(Concept),
}

impl Entity {
    pub fn id(&self) -> OpenAlexId {
        match self {
            Entity::Work(r) => r.id,
            Entity::Author(r) => r.id,
            Entity::Venue(r) => r.id,
            Entity::Institution(r) => r.id,
            Entity::Concept(r) => r.id,
        }
    }

    pub fn kind(&self) -> EntityKind {
        self.id().kind()
    }

    /// The canonical external id, as its normalized string.
    pub fn ceid(&self) -> Option<&str> {
        match self {
            Entity::Work(r) => r.doi.as_ref().map(Doi::as_str),
            Entity::Author(r) => r.orcid.as_ref().map(Orcid::as_str),
            Entity::Venue(r) => r.issn_l.as_ref().map(Issn::as_str),
            Entity::Institution(r) => r.ror.as_ref().map(Ror::as_str),
            Entity::Concept(r) => Some(r.wikidata.as_str()),
        }
    }

    pub fn updated_date(&self) -> NaiveDate {
        match self {
            Entity::Work(r) => r.updated_date,
            Entity::Author(r) => r.updated_date,
            Entity::Venue(r) => r.updated_date,
            Entity::Institution(r) => r.updated_date,
            Entity::Concept(r) => r.updated_date,
        }
    }

    pub fn set_updated_date(&mut self, date: NaiveDate) {
        match self {
            Entity::Work(r) => r.updated_date = date,
            Entity::Author(r) => r.updated_date = date,
            Entity::Venue(r) => r.updated_date = date,
            Entity::Institution(r) => r.updated_date = date,
            Entity::Concept(r) => r.updated_date = date,
        }
    }

    pub fn created_date(&self) -> NaiveDate {
        match self {
            Entity::Work(r) => r.created_date,
            Entity::Author(r) => r.created_date,
            Entity::Venue(r) => r.created_date,
            Entity::Institution(r) => r.created_date,
            Entity::Concept(r) => r.created_date,
        }
    }

    pub fn set_created_date(&mut self, date: NaiveDate) {
        match self {
            Entity::Work(r) => r.created_date = date,
            Entity::Author(r) => r.created_date = date,
            Entity::Venue(r) => r.created_date = date,
            Entity::Institution(r) => r.created_date = date,
            Entity::Concept(r) => r.created_date = date,
        }
    }

    /// Every id this record links to, with a label for error messages.
    pub fn edges(&self) -> Vec<(String, OpenAlexId)> {
        let mut out = Vec::new();
        match self {
            Entity::Work(w) => {
                for (i, a) in w.authorships.iter().enumerate() {
                    out.push((format!("authorship {i} author"), a.author));
                    for inst in &a.institutions {
                        out.push((format!("authorship {i} institution"), *inst));
                    }
                }
                for (i, l) in w.locations.iter().enumerate() {
                    if let Some(v) = l.venue {
                        out.push((format!("location {i} venue"), v));
                    }
                }
                for c in &w.concepts {
                    out.push(("concept".into(), c.id));
                }
                for r in &w.referenced_works {
                    out.push(("referenced work".into(), *r));
                }
            }
            Entity::Concept(c) => {
                for p in &c.parents {
                    out.push(("parent".into(), *p));
                }
            }
            Entity::Author(_) | Entity::Venue(_) | Entity::Institution(_) => {}
        }
        out
    }

    /// Serialize the bare record (no kind tag), keys in declaration order.
    pub fn to_record_json(&self) -> String {
        match self {
            Entity::Work(r) => serde_json::to_string(r),
            Entity::Author(r) => serde_json::to_string(r),
            Entity::Venue(r) => serde_json::to_string(r),
            Entity::Institution(r) => serde_json::to_string(r),
            Entity::Concept(r) => serde_json::to_string(r),
        }
        .expect("entity records always serialize")
    }

    pub fn to_record_value(&self) -> serde_json::Value {
        match self {
            Entity::Work(r) => serde_json::to_value(r),
            Entity::Author(r) => serde_json::to_value(r),
            Entity::Venue(r) => serde_json::to_value(r),
            Entity::Institution(r) => serde_json::to_value(r),
            Entity::Concept(r) => serde_json::to_value(r),
        }
        .expect("entity records always serialize")
    }

    pub fn from_record_json(kind: EntityKind, line: &str) -> serde_json::Result<Self> {
        Ok(match kind {
            EntityKind::Work => Entity::Work(serde_json::from_str(line)?),
            EntityKind::Author => Entity::Author(serde_json::from_str(line)?),
            EntityKind::Venue => Entity::Venue(serde_json::from_str(line)?),
            EntityKind::Institution => Entity::Institution(serde_json::from_str(line)?),
            EntityKind::Concept => Entity::Concept(serde_json::from_str(line)?),
        })
    }

    pub fn as_work(&self) -> Option<&Work> {
        match self {
            Entity::Work(w) => Some(w),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------- validation

/// A broken record-level invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{id}: {rule}")]
pub struct RecordViolation {
    pub id: OpenAlexId,
    pub rule: String,
}

fn check(out: &mut Vec<RecordViolation>, id: OpenAlexId, ok: bool, rule: impl FnOnce() -> String) {
    if !ok {
        out.push(RecordViolation { id, rule: rule() });
    }
}

fn has_duplicates<T: Ord + Clone>(items: &[T]) -> bool {
    let mut sorted = items.to_vec();
    sorted.sort();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Checks every record-level invariant that needs no store access.
pub fn validate(entity: &Entity) -> Vec<RecordViolation> {
    let mut v = Vec::new();
    let id = entity.id();
    let expected_kind = match entity {
        Entity::Work(_) => EntityKind::Work,
        Entity::Author(_) => EntityKind::Author,
        Entity::Venue(_) => EntityKind::Venue,
        Entity::Institution(_) => EntityKind::Institution,
        Entity::Concept(_) => EntityKind::Concept,
    };
    check(&mut v, id, id.kind() == expected_kind, || format!("id kind is not {expected_kind}"));
    match entity {
        Entity::Work(w) => validate_work(w, &mut v),
        Entity::Author(_) => {}
        Entity::Venue(r) => {
            if let Some(l) = &r.issn_l {
                check(&mut v, id, r.issns.contains(l), || format!("issn_l {l} not listed in issns"));
            }
            check(&mut v, id, !has_duplicates(&r.issns), || "duplicate ISSN".into());
        }
        Entity::Institution(r) => {
            if let Some(cc) = &r.country_code {
                check(&mut v, id, cc.len() == 2 && cc.bytes().all(|b| b.is_ascii_uppercase()), || {
                    format!("country_code {cc:?} is not a 2-letter code")
                });
            }
        }
        Entity::Concept(c) => {
            check(&mut v, id, c.level <= 5, || format!("level {} exceeds 5", c.level));
            check(&mut v, id, (c.level == 0) == c.parents.is_empty(), || {
                "level 0 iff no parents".into()
            });
            check(&mut v, id, c.parents.iter().all(|p| p.kind() == EntityKind::Concept), || {
                "parent is not a concept".into()
            });
            check(&mut v, id, !c.parents.contains(&c.id), || "concept is its own parent".into());
            check(&mut v, id, !has_duplicates(&c.parents), || "duplicate parent".into());
        }
    }
    v
}

fn validate_work(w: &Work, v: &mut Vec<RecordViolation>) {
    let id = w.id;
    let primaries = w.locations.iter().filter(|l| l.primary).count();
    check(v, id, w.locations.is_empty() || primaries == 1, || {
        format!("expected exactly one primary location, found {primaries}")
    });
    for (i, loc) in w.locations.iter().enumerate() {
        check(v, id, loc.venue.is_some() || loc.url.is_some(), || format!("location {i} has neither venue nor url"));
        if let Some(venue) = loc.venue {
            check(v, id, venue.kind() == EntityKind::Venue, || format!("location {i} venue {venue} is not a venue"));
        }
    }
    let n = w.authorships.len();
    for (i, a) in w.authorships.iter().enumerate() {
        let expected = Position::for_index(i, n);
        check(v, id, a.position == expected, || format!("authorship {i} position {:?}, expected {expected:?}", a.position));
        check(v, id, a.author.kind() == EntityKind::Author, || format!("authorship {i} author is not an author id"));
        check(v, id, a.institutions.iter().all(|x| x.kind() == EntityKind::Institution), || {
            format!("authorship {i} lists a non-institution id")
        });
        check(v, id, !has_duplicates(&a.institutions), || format!("authorship {i} has duplicate institutions"));
    }
    for c in &w.concepts {
        check(v, id, (0.0..=1.0).contains(&c.score), || format!("concept {} score {} outside [0,1]", c.id, c.score));
        check(v, id, c.id.kind() == EntityKind::Concept, || format!("{} is not a concept id", c.id));
    }
    let concept_ids: Vec<OpenAlexId> = w.concepts.iter().map(|c| c.id).collect();
    check(v, id, !has_duplicates(&concept_ids), || "duplicate concept assignment".into());
    check(v, id, !w.referenced_works.contains(&id), || "work references itself".into());
    check(v, id, !has_duplicates(&w.referenced_works), || "duplicate referenced work".into());
    check(v, id, w.referenced_works.iter().all(|r| r.kind() == EntityKind::Work), || {
        "referenced id is not a work".into()
    });
    check(v, id, !has_duplicates(&w.unresolved_references), || "duplicate unresolved reference".into());
    if let Some(doi) = &w.doi {
        check(v, id, !w.unresolved_references.contains(doi), || "work lists its own DOI as unresolved".into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mint_is_monotonic_per_kind() {
        let alloc = IdAllocator::new();
        assert_eq!(alloc.mint(EntityKind::Work).unwrap().short(), "W1");
        let alloc = IdAllocator::from_last([6, 2, 0, 0, 0]);
        assert_eq!(alloc.mint(EntityKind::Work).unwrap().short(), "W7");
        assert_eq!(alloc.mint(EntityKind::Author).unwrap().short(), "A3");
        let alloc = IdAllocator::from_last([0, 41, 0, 0, 0]);
        assert_eq!(alloc.mint(EntityKind::Author).unwrap().short(), "A42");
    }

    #[test]
    fn mint_overflow_is_an_error() {
        let alloc = IdAllocator::from_last([u64::MAX, 0, 0, 0, 0]);
        assert_eq!(alloc.mint(EntityKind::Work), Err(AllocatorExhausted(EntityKind::Work)));
    }

    #[test]
    fn parse_examples() {
        let w = OpenAlexId::parse("https://openalex.org/W123").unwrap();
        assert_eq!((w.kind(), w.serial()), (EntityKind::Work, 123));
        let a = OpenAlexId::parse("a7").unwrap();
        assert_eq!((a.kind(), a.serial()), (EntityKind::Author, 7));
        assert_eq!(OpenAlexId::parse("W0"), Err(IdParseError::ZeroSerial));
        assert_eq!(OpenAlexId::parse("https://openalex.org/W5/").unwrap().short(), "W5");
        assert_eq!(OpenAlexId::parse("X5"), Err(IdParseError::UnknownKind('X')));
        assert!(matches!(OpenAlexId::parse("W12a"), Err(IdParseError::BadSerial(_))));
        assert!(matches!(OpenAlexId::parse("https://example.org/W5"), Err(IdParseError::BadHost(_))));
    }

    #[test]
    fn canonical_form_examples() {
        let w = OpenAlexId::new(EntityKind::Work, 123).unwrap();
        assert_eq!(w.canonical_forms(), ("W123".to_string(), "https://openalex.org/W123".to_string()));
        let c = OpenAlexId::new(EntityKind::Concept, 5).unwrap();
        assert_eq!(c.canonical_forms(), ("C5".to_string(), "https://openalex.org/C5".to_string()));
    }

    #[test]
    fn enum_wire_names() {
        assert_eq!(serde_json::to_string(&WorkType::JournalArticle).unwrap(), "\"journal-article\"");
        assert_eq!(serde_json::to_string(&Version::Published).unwrap(), "\"publishedVersion\"");
        assert_eq!(serde_json::to_string(&Position::Middle).unwrap(), "\"middle\"");
    }
}
