//! Canonical external identifiers: DOI, ORCID, ISSN (with ISSN-L grouping),
//! ROR and Wikidata.
//!
//! Every normalizer returns the exact string that is stored on entities and
//! emitted in dumps and API responses. Normalizers are idempotent.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Doi,
    Orcid,
    Issn,
    Ror,
    Wikidata,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Doi => "DOI",
            Scheme::Orcid => "ORCID",
            Scheme::Issn => "ISSN",
            Scheme::Ror => "ROR",
            Scheme::Wikidata => "Wikidata",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("invalid DOI: {raw:?}")]
    InvalidDoi { raw: String },
    #[error("malformed {scheme} {raw:?}: {reason}")]
    Malformed { scheme: Scheme, raw: String, reason: &'static str },
    #[error("{scheme} checksum failure: {raw:?}")]
    Checksum { scheme: Scheme, raw: String },
}

fn malformed(scheme: Scheme, raw: &str, reason: &'static str) -> IdError {
    IdError::Malformed { scheme, raw: raw.to_owned(), reason }
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    if s.len() >= prefix.len() && s.is_char_boundary(prefix.len()) && s[..prefix.len()].eq_ignore_ascii_case(prefix) {
        Some(&s[prefix.len()..])
    } else {
        None
    }
}

macro_rules! string_newtype {
    ($name:ident, $parse:path) => {
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::str::FromStr for $name {
            type Err = IdError;
            fn from_str(s: &str) -> Result<Self, IdError> {
                $parse(s)
            }
        }

        impl TryFrom<String> for $name {
            type Error = IdError;
            fn try_from(s: String) -> Result<Self, IdError> {
                let parsed = $parse(&s)?;
                // Stored values must already be canonical.
                if parsed.0 != s {
                    return Err(malformed_noncanonical(&s));
                }
                Ok(parsed)
            }
        }

        impl From<$name> for String {
            fn from(v: $name) -> String {
                v.0
            }
        }
    };
}

fn malformed_noncanonical(raw: &str) -> IdError {
    IdError::Malformed { scheme: Scheme::Doi, raw: raw.to_owned(), reason: "stored identifier is not in canonical form" }
}

string_newtype!(Doi, normalize_doi);
string_newtype!(Orcid, validate_orcid);
string_newtype!(Issn, validate_issn);
string_newtype!(Ror, validate_ror);
string_newtype!(WikidataId, validate_wikidata);

// ---------------------------------------------------------------- DOI

/// Strip a `doi.org` or `dx.doi.org` URL prefix or `doi:`, trim and
/// lowercase; the result must be `10.` + 4..=9 digits + `/` + suffix.
pub fn normalize_doi(raw: &str) -> Result<Doi, IdError> {
    let trimmed = raw.trim();
    let body = ["https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/", "doi:"]
        .iter()
        .find_map(|p| strip_prefix_ci(trimmed, p))
        .unwrap_or(trimmed)
        .trim()
        .to_lowercase();
    let invalid = || IdError::InvalidDoi { raw: raw.to_owned() };
    let rest = body.strip_prefix("10.").ok_or_else(invalid)?;
    let (registrant, suffix) = rest.split_once('/').ok_or_else(invalid)?;
    if !(4..=9).contains(&registrant.len()) || !registrant.bytes().all(|b| b.is_ascii_digit()) {
        return Err(invalid());
    }
    if suffix.is_empty() || suffix.chars().any(char::is_whitespace) {
        return Err(invalid());
    }
    Ok(Doi(body))
}

// ---------------------------------------------------------------- ORCID

/// ISO 7064 MOD 11-2 check character over a digit string.
pub fn mod11_2_check(digits: &[u8]) -> char {
    let mut total: u32 = 0;
    for &d in digits {
        total = (total + u32::from(d)) * 2;
    }
    match (12 - total % 11) % 11 {
        10 => 'X',
        r => char::from_digit(r, 10).expect("digit"),
    }
}

pub fn validate_orcid(raw: &str) -> Result<Orcid, IdError> {
    let trimmed = raw.trim();
    let body = ["https://orcid.org/", "http://orcid.org/"]
        .iter()
        .find_map(|p| strip_prefix_ci(trimmed, p))
        .unwrap_or(trimmed);
    let compact: String = match body.len() {
        19 => {
            let parts: Vec<&str> = body.split('-').collect();
            if parts.len() != 4 || parts.iter().any(|p| p.len() != 4) {
                return Err(malformed(Scheme::Orcid, raw, "expected four hyphenated groups of four"));
            }
            parts.concat()
        }
        16 => body.to_owned(),
        _ => return Err(malformed(Scheme::Orcid, raw, "expected 16 characters")),
    };
    let compact = compact.to_ascii_uppercase();
    let bytes = compact.as_bytes();
    if !bytes[..15].iter().all(u8::is_ascii_digit) || !(bytes[15].is_ascii_digit() || bytes[15] == b'X') {
        return Err(malformed(Scheme::Orcid, raw, "expected 15 digits and a digit or X check character"));
    }
    let digits: Vec<u8> = bytes[..15].iter().map(|b| b - b'0').collect();
    if mod11_2_check(&digits) != bytes[15] as char {
        return Err(IdError::Checksum { scheme: Scheme::Orcid, raw: raw.to_owned() });
    }
    Ok(Orcid(format!("{}-{}-{}-{}", &compact[0..4], &compact[4..8], &compact[8..12], &compact[12..16])))
}

// ---------------------------------------------------------------- ISSN

/// ISSN check character: weights 8..=2 over seven digits, `(11 - sum mod 11) mod 11`.
pub fn issn_check(digits: &[u8]) -> char {
    let sum: u32 = digits.iter().zip((2..=8).rev()).map(|(&d, w)| u32::from(d) * w).sum();
    match (11 - sum % 11) % 11 {
        10 => 'X',
        r => char::from_digit(r, 10).expect("digit"),
    }
}

pub fn validate_issn(raw: &str) -> Result<Issn, IdError> {
    let body = raw.trim();
    let compact: String = match body.len() {
        9 if body.as_bytes()[4] == b'-' => format!("{}{}", &body[..4], &body[5..]),
        8 => body.to_owned(),
        _ => return Err(malformed(Scheme::Issn, raw, "expected NNNN-NNNC or NNNNNNNC")),
    };
    let compact = compact.to_ascii_uppercase();
    let bytes = compact.as_bytes();
    if !bytes[..7].iter().all(u8::is_ascii_digit) || !(bytes[7].is_ascii_digit() || bytes[7] == b'X') {
        return Err(malformed(Scheme::Issn, raw, "expected seven digits and a digit or X check character"));
    }
    let digits: Vec<u8> = bytes[..7].iter().map(|b| b - b'0').collect();
    if issn_check(&digits) != bytes[7] as char {
        return Err(IdError::Checksum { scheme: Scheme::Issn, raw: raw.to_owned() });
    }
    Ok(Issn(format!("{}-{}", &compact[..4], &compact[4..])))
}

#[derive(Debug, Error)]
pub enum LinkingTableError {
    #[error("reading linking table: {0}")]
    Io(#[from] std::io::Error),
    #[error("linking table line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("linking table is missing its header row")]
    MissingHeader,
    #[error("ISSN-L {issn_l} maps to {other} instead of itself")]
    NotIdempotent { issn_l: Issn, other: Issn },
}

/// ISSN → ISSN-L grouping table. Every ISSN-L maps to itself.
#[derive(Debug, Clone, Default)]
pub struct IssnLinkingTable {
    entries: BTreeMap<Issn, Issn>,
}

/// Whether an ISSN-L came from the table or from the singleton fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssnLinkSource {
    Table,
    Fallback,
}

impl IssnLinkingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from `(issn, issn_l)` pairs, adding missing self-mappings.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, LinkingTableError>
    where
        I: IntoIterator<Item = (Issn, Issn)>,
    {
        let mut entries = BTreeMap::new();
        for (issn, link) in pairs {
            entries.insert(issn, link);
        }
        let links: Vec<Issn> = entries.values().cloned().collect();
        for link in links {
            match entries.get(&link) {
                None => {
                    entries.insert(link.clone(), link);
                }
                Some(other) if *other != link => {
                    return Err(LinkingTableError::NotIdempotent { issn_l: link.clone(), other: other.clone() })
                }
                Some(_) => {}
            }
        }
        Ok(Self { entries })
    }

    /// Two-column CSV `ISSN,ISSN-L` with a header row.
    pub fn from_csv_reader<R: Read>(mut reader: R) -> Result<Self, LinkingTableError> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(LinkingTableError::MissingHeader)?;
        let header = header.trim_start_matches('\u{feff}');
        if !header.to_ascii_uppercase().starts_with("ISSN") || validate_issn(header.split(',').next().unwrap_or("")).is_ok() {
            return Err(LinkingTableError::MissingHeader);
        }
        let mut pairs = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(LinkingTableError::Line { line: line_no, reason: "expected two columns".into() });
            }
            let issn = validate_issn(cols[0]).map_err(|e| LinkingTableError::Line { line: line_no, reason: e.to_string() })?;
            let link = validate_issn(cols[1]).map_err(|e| LinkingTableError::Line { line: line_no, reason: e.to_string() })?;
            pairs.push((issn, link));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<Self, LinkingTableError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Table entry when present, otherwise the ISSN itself as a singleton group.
    pub fn issn_l_of(&self, issn: &Issn) -> Issn {
        self.resolve(issn).0
    }

    pub fn resolve(&self, issn: &Issn) -> (Issn, IssnLinkSource) {
        match self.entries.get(issn) {
            Some(link) => (link.clone(), IssnLinkSource::Table),
            None => (issn.clone(), IssnLinkSource::Fallback),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Issn, &Issn)> {
        self.entries.iter()
    }
}

// ---------------------------------------------------------------- ROR

pub const CROCKFORD_ALPHABET: &str = "0123456789abcdefghjkmnpqrstvwxyz";

fn crockford_value(c: char) -> Option<u64> {
    CROCKFORD_ALPHABET.find(c).map(|i| i as u64)
}

/// Two-digit ROR checksum of a 7-character body (`0` + six base-32 chars):
/// `98 - (n * 100 mod 97)` where `n` is the decoded body.
pub fn ror_checksum(body: &str) -> Option<u8> {
    let mut n: u64 = 0;
    for c in body.chars() {
        n = n * 32 + crockford_value(c)?;
    }
    Some((98 - (n * 100) % 97) as u8)
}

pub fn validate_ror(raw: &str) -> Result<Ror, IdError> {
    let trimmed = raw.trim();
    let body = ["https://ror.org/", "http://ror.org/"]
        .iter()
        .find_map(|p| strip_prefix_ci(trimmed, p))
        .unwrap_or(trimmed)
        .to_ascii_lowercase();
    if body.len() != 9 || !body.is_ascii() {
        return Err(malformed(Scheme::Ror, raw, "expected 9 characters"));
    }
    if !body.starts_with('0') {
        return Err(malformed(Scheme::Ror, raw, "must start with 0"));
    }
    if !body[1..7].chars().all(|c| crockford_value(c).is_some()) {
        return Err(malformed(Scheme::Ror, raw, "characters 2-7 must be Crockford base-32"));
    }
    if !body[7..].bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(Scheme::Ror, raw, "must end with two decimal digits"));
    }
    let expected = ror_checksum(&body[..7]).expect("alphabet checked");
    let actual: u8 = body[7..].parse().expect("digits checked");
    if expected != actual {
        return Err(IdError::Checksum { scheme: Scheme::Ror, raw: raw.to_owned() });
    }
    Ok(Ror(body))
}

// ---------------------------------------------------------------- Wikidata

pub fn validate_wikidata(raw: &str) -> Result<WikidataId, IdError> {
    let trimmed = raw.trim();
    let body = ["https://www.wikidata.org/wiki/", "http://www.wikidata.org/wiki/"]
        .iter()
        .find_map(|p| strip_prefix_ci(trimmed, p))
        .unwrap_or(trimmed);
    let digits = body
        .strip_prefix('Q')
        .or_else(|| body.strip_prefix('q'))
        .ok_or_else(|| malformed(Scheme::Wikidata, raw, "expected Q followed by digits"))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(Scheme::Wikidata, raw, "expected Q followed by digits"));
    }
    let stripped = digits.trim_start_matches('0');
    if stripped.is_empty() {
        return Err(malformed(Scheme::Wikidata, raw, "value must be at least 1"));
    }
    if stripped.len() > 19 {
        return Err(malformed(Scheme::Wikidata, raw, "value too large"));
    }
    Ok(WikidataId(format!("Q{stripped}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doi_examples() {
        assert_eq!(normalize_doi("https://doi.org/10.1145/2740908.2742839").unwrap().as_str(), "10.1145/2740908.2742839");
        assert_eq!(normalize_doi("10.24343/C34W2H").unwrap().as_str(), "10.24343/c34w2h");
        assert_eq!(normalize_doi("10.1234/abc").unwrap().as_str(), "10.1234/abc");
        assert_eq!(normalize_doi("not-a-doi"), Err(IdError::InvalidDoi { raw: "not-a-doi".into() }));
        assert_eq!(normalize_doi("  DOI:10.5438/JWVF-8A66 ").unwrap().as_str(), "10.5438/jwvf-8a66");
        assert_eq!(normalize_doi("HTTP://DOI.ORG/10.5281/zenodo.3516918").unwrap().as_str(), "10.5281/zenodo.3516918");
    }

    #[test]
    fn doi_registrant_length_bounds() {
        assert!(normalize_doi("10.123/x").is_err());
        assert!(normalize_doi("10.1234567890/x").is_err());
        assert!(normalize_doi("10.123456789/x").is_ok());
        assert!(normalize_doi("10.1234/").is_err());
        assert!(normalize_doi("10.1/x").is_err());
    }

    #[test]
    fn orcid_examples() {
        assert_eq!(validate_orcid("0000-0002-1825-0097").unwrap().as_str(), "0000-0002-1825-0097");
        assert!(matches!(validate_orcid("0000-0002-1825-0098"), Err(IdError::Checksum { .. })));
        assert!(matches!(validate_orcid("1234"), Err(IdError::Malformed { .. })));
        assert_eq!(validate_orcid("https://orcid.org/0000000218250097").unwrap().as_str(), "0000-0002-1825-0097");
        assert_eq!(validate_orcid("0000-0002-9079-593x").unwrap().as_str(), "0000-0002-9079-593X");
    }

    #[test]
    fn issn_examples() {
        assert_eq!(validate_issn("0378-5955").unwrap().as_str(), "0378-5955");
        assert_eq!(validate_issn("03785955").unwrap().as_str(), "0378-5955");
        assert!(matches!(validate_issn("0378-5954"), Err(IdError::Checksum { .. })));
        assert!(matches!(validate_issn("0378_5955"), Err(IdError::Malformed { .. })));
        assert_eq!(validate_issn("2434-561x").unwrap().as_str(), "2434-561X");
    }

    #[test]
    fn issn_linking_lookup_and_fallback() {
        let a = validate_issn("2222-2227").unwrap();
        let b = validate_issn("1111-1119").unwrap();
        let table = IssnLinkingTable::from_pairs([(a.clone(), b.clone()), (b.clone(), b.clone())]).unwrap();
        assert_eq!(table.issn_l_of(&a), b);
        assert_eq!(table.issn_l_of(&b), b);
        let lone = validate_issn("0378-5955").unwrap();
        assert_eq!(table.resolve(&lone), (lone.clone(), IssnLinkSource::Fallback));
    }

    #[test]
    fn linking_table_csv_requires_header_and_adds_self_links() {
        let csv = "ISSN,ISSN-L\n2222-2227,1111-1119\n";
        let table = IssnLinkingTable::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(table.len(), 2);
        assert!(matches!(
            IssnLinkingTable::from_csv_reader("2222-2227,1111-1119\n".as_bytes()),
            Err(LinkingTableError::MissingHeader)
        ));
        let bad = "ISSN,ISSN-L\n2222-2227,1111-1119\n1111-1119,0378-5955\n";
        assert!(matches!(IssnLinkingTable::from_csv_reader(bad.as_bytes()), Err(LinkingTableError::NotIdempotent { .. })));
    }

    #[test]
    fn ror_known_ids_and_shape() {
        for id in ["03yrm5c26", "05dxps055", "https://ror.org/02mhbdp94"] {
            assert!(validate_ror(id).is_ok(), "{id}");
        }
        assert!(matches!(validate_ror("1abcdef00"), Err(IdError::Malformed { reason: "must start with 0", .. })));
        assert!(matches!(validate_ror("03yrm5c27"), Err(IdError::Checksum { .. })));
        assert!(matches!(validate_ror("0iyrm5c26"), Err(IdError::Malformed { .. })));
    }

    #[test]
    fn wikidata_examples() {
        assert_eq!(validate_wikidata("Q123").unwrap().as_str(), "Q123");
        assert_eq!(validate_wikidata("https://www.wikidata.org/wiki/Q42").unwrap().as_str(), "Q42");
        assert!(validate_wikidata("Q0").is_err());
        assert_eq!(validate_wikidata("Q007").unwrap().as_str(), "Q7");
    }

    #[test]
    fn newtypes_reject_noncanonical_on_deserialize() {
        let ok: Doi = serde_json::from_str("\"10.1234/abc\"").unwrap();
        assert_eq!(ok.as_str(), "10.1234/abc");
        assert!(serde_json::from_str::<Doi>("\"10.1234/ABC\"").is_err());
    }
}
