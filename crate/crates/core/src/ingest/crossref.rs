//! Crossref `message` items (also used for repository records) → `WorkStub`.
//!
//! Field map:
//!
//! | source field                     | stub field                                  |
//! |----------------------------------|---------------------------------------------|
//! | `DOI`                            | `doi` (normalized)                          |
//! | `title[0]`                       | `title`                                     |
//! | `abstract`                       | `abstract` (markup stripped)                |
//! | `issued.date-parts[0][0]`        | `publication_year`                          |
//! | `type`                           | `work_type`, `venue_type`, `version_hint`   |
//! | `author[]`                       | `stub_authors` (`given family` or `name`)   |
//! | `author[].ORCID`                 | `stub_authors[].orcid`                      |
//! | `author[].affiliation[]`         | `stub_authors[].raw_affiliations`           |
//! | `container-title[0]`             | `venue_name`                                |
//! | `ISSN[]`                         | `issns` (validated)                         |
//! | `URL` / `resource.primary.URL`   | `url`                                       |
//! | `license[].URL`                  | `license` token                             |
//! | `reference[].DOI`                | `referenced_dois`                           |
//! | `version`                        | `version_hint` override                     |
//! | `indexed.date-parts[0]`          | `retrieved_date` (else caller default)      |
//! | `id`                             | `source_record_id` (else DOI)               |

use chrono::NaiveDate;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{push_unique, strip_tags, Parsed, RejectReason, StubAuthor, WorkStub};
use crate::identifiers::{normalize_doi, validate_issn, validate_orcid};
use crate::model::{SourceKind, VenueType, Version, WorkType};

/// Fixed Crossref `type` → work type table.
pub fn map_work_type(crossref_type: &str) -> WorkType {
    match crossref_type {
        "journal-article" => WorkType::JournalArticle,
        "book" | "monograph" => WorkType::Book,
        "dataset" => WorkType::Dataset,
        "dissertation" => WorkType::Thesis,
        _ => WorkType::Other,
    }
}

/// Fixed license URL → token table; unknown URLs map to `None`.
pub fn license_token(url: &str) -> Option<&'static str> {
    let lower = url.trim().to_ascii_lowercase();
    let (_, path) = lower.split_once("creativecommons.org/")?;
    let mut segs = path.split('/').filter(|s| !s.is_empty());
    match (segs.next()?, segs.next()?) {
        ("licenses", "by") => Some("cc-by"),
        ("licenses", "by-sa") => Some("cc-by-sa"),
        ("licenses", "by-nd") => Some("cc-by-nd"),
        ("licenses", "by-nc") => Some("cc-by-nc"),
        ("licenses", "by-nc-sa") => Some("cc-by-nc-sa"),
        ("licenses", "by-nc-nd") => Some("cc-by-nc-nd"),
        ("publicdomain", "zero") => Some("cc0"),
        ("publicdomain", "mark") => Some("public-domain"),
        _ => None,
    }
}

fn date_parts(v: Option<&Value>) -> Option<Vec<i64>> {
    let parts = v?.get("date-parts")?.get(0)?.as_array()?;
    parts.iter().map(|p| p.as_i64().or_else(|| p.as_str()?.parse().ok())).collect()
}

fn first_string(v: Option<&Value>) -> Option<String> {
    let s = match v? {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().find_map(|i| i.as_str().map(str::to_owned))?,
        _ => return None,
    };
    let s = crate::text::collapse_ws(&s);
    (!s.is_empty()).then_some(s)
}

fn parse_author(a: &Value, warnings: &mut Vec<String>) -> Option<StubAuthor> {
    let given = a.get("given").and_then(Value::as_str).unwrap_or("").trim();
    let family = a.get("family").and_then(Value::as_str).unwrap_or("").trim();
    let name = if !family.is_empty() {
        crate::text::collapse_ws(&format!("{given} {family}"))
    } else {
        crate::text::collapse_ws(a.get("name").and_then(Value::as_str).unwrap_or(given))
    };
    if name.is_empty() {
        warnings.push("author without a name skipped".into());
        return None;
    }
    let orcid = match a.get("ORCID").and_then(Value::as_str) {
        Some(raw) => match validate_orcid(raw) {
            Ok(o) => Some(o),
            Err(e) => {
                warnings.push(format!("author ORCID skipped: {e}"));
                None
            }
        },
        None => None,
    };
    let mut raw_affiliations = Vec::new();
    if let Some(affs) = a.get("affiliation").and_then(Value::as_array) {
        for aff in affs {
            let s = match aff {
                Value::String(s) => Some(s.as_str()),
                Value::Object(o) => o.get("name").and_then(Value::as_str),
                _ => None,
            };
            match s.map(str::trim).filter(|s| !s.is_empty()) {
                Some(s) => raw_affiliations.push(s.to_owned()),
                None => warnings.push("malformed affiliation skipped".into()),
            }
        }
    }
    Some(StubAuthor { raw_name: name, orcid, raw_affiliations })
}

/// Parse one Crossref-shaped item. `default_date` is used when the record
/// carries no `indexed` date.
pub fn parse_crossref(record: &Value, source: SourceKind, default_date: NaiveDate) -> Result<Parsed, RejectReason> {
    let obj = record.as_object().ok_or_else(|| RejectReason::NotARecord(format!("expected a JSON object, got {record}")))?;
    let mut warnings = Vec::new();

    let doi = match obj.get("DOI") {
        Some(Value::String(raw)) => match normalize_doi(raw) {
            Ok(d) => Some(d),
            Err(e) => {
                warnings.push(format!("DOI skipped: {e}"));
                None
            }
        },
        Some(Value::Null) | None => None,
        Some(other) => {
            warnings.push(format!("DOI skipped: not a string: {other}"));
            None
        }
    };
    let title = first_string(obj.get("title"));
    if doi.is_none() && title.is_none() {
        return Err(RejectReason::Unidentifiable);
    }
    let r#abstract = obj.get("abstract").and_then(Value::as_str).map(strip_tags).filter(|s| !s.is_empty());
    let publication_year = match date_parts(obj.get("issued")) {
        Some(p) if !p.is_empty() => i32::try_from(p[0]).ok(),
        _ => {
            if obj.contains_key("issued") {
                warnings.push("issued date skipped".into());
            }
            None
        }
    };
    let crossref_type = obj.get("type").and_then(Value::as_str).unwrap_or("");
    let work_type = map_work_type(crossref_type);
    let venue_type = if source == SourceKind::Repository {
        VenueType::Repository
    } else if crossref_type == "proceedings-article" {
        VenueType::Conference
    } else {
        VenueType::Journal
    };
    let mut version_hint = match (source, crossref_type) {
        (SourceKind::Repository, _) | (_, "posted-content") => Version::Submitted,
        _ => Version::Published,
    };
    if let Some(v) = obj.get("version").and_then(Value::as_str) {
        match Version::parse(v) {
            Some(v) => version_hint = v,
            None => warnings.push(format!("unknown version {v:?} skipped")),
        }
    }

    let mut stub_authors = Vec::new();
    if let Some(authors) = obj.get("author") {
        match authors.as_array() {
            Some(list) => stub_authors.extend(list.iter().filter_map(|a| parse_author(a, &mut warnings))),
            None => warnings.push("author field is not a list".into()),
        }
    }

    let mut issns = Vec::new();
    for raw in obj.get("ISSN").and_then(Value::as_array).into_iter().flatten() {
        match raw.as_str().map(validate_issn) {
            Some(Ok(i)) => push_unique(&mut issns, i),
            Some(Err(e)) => warnings.push(format!("ISSN skipped: {e}")),
            None => warnings.push("ISSN skipped: not a string".into()),
        }
    }

    let url = obj
        .get("URL")
        .and_then(Value::as_str)
        .or_else(|| obj.get("resource")?.get("primary")?.get("URL")?.as_str())
        .map(str::to_owned);

    let license = obj
        .get("license")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(|l| l.get("URL").and_then(Value::as_str))
        .find_map(license_token)
        .map(str::to_owned);

    let mut referenced_dois = Vec::new();
    let mut without_doi = 0usize;
    for r in obj.get("reference").and_then(Value::as_array).into_iter().flatten() {
        match r.get("DOI").and_then(Value::as_str) {
            Some(raw) => match normalize_doi(raw) {
                Ok(d) => push_unique(&mut referenced_dois, d),
                Err(e) => warnings.push(format!("reference skipped: {e}")),
            },
            None => without_doi += 1,
        }
    }
    if without_doi > 0 {
        warnings.push(format!("{without_doi} references without DOI dropped"));
    }
    if let Some(d) = &doi {
        referenced_dois.retain(|r| r != d);
    }

    let retrieved_date = date_parts(obj.get("indexed"))
        .filter(|p| p.len() == 3)
        .and_then(|p| NaiveDate::from_ymd_opt(p[0] as i32, p[1] as u32, p[2] as u32))
        .unwrap_or(default_date);

    let source_record_id = match obj.get("id") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_owned(),
        Some(Value::Number(n)) => n.to_string(),
        _ => match &doi {
            Some(d) => d.as_str().to_owned(),
            None => {
                let digest = Sha256::digest(record.to_string().as_bytes());
                format!("sha256:{}", crate::hex(&digest[..8]))
            }
        },
    };

    Ok(Parsed {
        stub: WorkStub {
            source,
            source_record_id,
            doi,
            title,
            r#abstract,
            publication_year,
            work_type,
            stub_authors,
            venue_name: first_string(obj.get("container-title")),
            venue_type,
            issns,
            url,
            version_hint,
            license,
            referenced_dois,
            retrieved_date,
        },
        warnings,
    })
}
