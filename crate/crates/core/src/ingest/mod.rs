//! Source record parsing (Crossref-style JSON, PubMed XML), the cursored
//! harvest client and the per-record resolution pipeline.

pub mod crossref;
pub mod harvest;
pub mod pipeline;
pub mod pubmed;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identifiers::{Doi, Issn, Orcid};
use crate::model::{SourceKind, VenueType, Version, WorkType};

pub use crossref::parse_crossref;
pub use harvest::{HarvestClient, HarvestError, HarvestPage, RetryPolicy};
pub use pipeline::{IngestError, IngestOutcome, IngestReport, Pipeline, PipelineConfig};
pub use pubmed::{parse_pubmed, parse_pubmed_set};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubAuthor {
    pub raw_name: String,
    pub orcid: Option<Orcid>,
    pub raw_affiliations: Vec<String>,
}

/// Source-neutral record produced by the parsers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkStub {
    pub source: SourceKind,
    pub source_record_id: String,
    pub doi: Option<Doi>,
    pub title: Option<String>,
    pub r#abstract: Option<String>,
    pub publication_year: Option<i32>,
    pub work_type: WorkType,
    pub stub_authors: Vec<StubAuthor>,
    pub venue_name: Option<String>,
    pub venue_type: VenueType,
    pub issns: Vec<Issn>,
    pub url: Option<String>,
    pub version_hint: Version,
    pub license: Option<String>,
    pub referenced_dois: Vec<Doi>,
    pub retrieved_date: NaiveDate,
}

/// A parsed stub plus the field-level defects that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub stub: WorkStub,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("not a record: {0}")]
    NotARecord(String),
    #[error("record has neither a DOI nor a title")]
    Unidentifiable,
    #[error("XML is not well-formed: {0}")]
    MalformedXml(String),
    #[error("record has no usable identifier")]
    MissingIdentifier,
}

pub(crate) fn push_unique<T: PartialEq>(v: &mut Vec<T>, item: T) {
    if !v.contains(&item) {
        v.push(item);
    }
}

/// Strip markup tags (JATS abstracts) and collapse whitespace.
pub(crate) fn strip_tags(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut depth = 0usize;
    for c in raw.chars() {
        match c {
            '<' => depth += 1,
            '>' if depth > 0 => {
                depth -= 1;
                out.push(' ');
            }
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    crate::text::collapse_ws(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_jats_markup() {
        assert_eq!(strip_tags("<jats:p>Works are <i>scholarly</i> documents.</jats:p>"), "Works are scholarly documents.");
    }
}
