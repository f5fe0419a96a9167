//! Affiliation string → institution matching: candidate extraction, an
//! exact-name rules stage and an IDF-weighted token-set scorer.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::model::{Institution, OpenAlexId};
use crate::text;

pub const DEFAULT_INSTITUTION_THRESHOLD: f64 = 0.7;

const ABBREVIATIONS: &[(&str, &str)] = &[("univ", "university"), ("dept", "department"), ("inst", "institute")];

const ORG_KEYWORDS: &[&str] = &[
    "university", "universidad", "universidade", "universite", "universita", "universitat", "universiteit",
    "institute", "institut", "instituto", "department", "college", "school", "hospital", "center", "centre",
    "laboratory", "laboratories", "lab", "faculty", "academy", "foundation", "council", "agency", "clinic",
    "museum", "library", "observatory", "society", "corporation", "company", "inc", "ltd", "gmbh", "division",
    "program", "group", "unit", "ministry", "office", "service", "consortium", "polytechnic", "seminary", "tech",
    "technology",
];

const STREET_KEYWORDS: &[&str] = &[
    "street", "st", "road", "rd", "avenue", "ave", "drive", "dr", "boulevard", "blvd", "lane", "ln", "way",
    "suite", "ste", "floor", "box", "po", "building", "bldg", "highway", "hwy", "plaza", "calle", "strasse",
    "via", "rue", "court", "ct", "parkway", "pkwy",
];

const COUNTRIES: &[&str] = &[
    "usa", "us", "united states", "united states of america", "uk", "united kingdom", "england", "scotland",
    "wales", "spain", "espana", "france", "germany", "deutschland", "italy", "italia", "china", "japan", "india",
    "canada", "australia", "brazil", "brasil", "mexico", "netherlands", "the netherlands", "sweden",
    "switzerland", "austria", "belgium", "denmark", "norway", "finland", "poland", "portugal", "ireland",
    "korea", "south korea", "republic of korea", "russia", "russian federation", "israel", "south africa",
    "argentina", "chile", "colombia", "peru", "new zealand", "singapore", "greece", "turkey", "egypt", "nigeria",
    "kenya", "iran", "pakistan", "czech republic", "czechia", "hungary", "romania", "taiwan", "thailand",
    "vietnam", "indonesia", "malaysia", "philippines", "saudi arabia", "ethiopia", "ghana", "uganda",
];

/// Lowercase, fold diacritics, strip punctuation and expand the fixed
/// abbreviation table.
pub fn normalize_org(raw: &str) -> String {
    text::fold_alnum(raw)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(|t| ABBREVIATIONS.iter().find(|(a, _)| *a == t).map_or(t, |(_, full)| *full))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Segment {
    Keep,
    Empty,
    /// Postal code, house number or street line; everything after it is address.
    AddressStart,
    /// Region code or country name.
    Place,
}

fn classify(raw: &str) -> Segment {
    let norm = normalize_org(raw);
    if norm.is_empty() {
        return Segment::Empty;
    }
    let toks: Vec<&str> = norm.split(' ').collect();
    let has_org = toks.iter().any(|t| ORG_KEYWORDS.contains(t));
    if toks.iter().all(|t| t.bytes().all(|b| b.is_ascii_digit())) {
        return Segment::AddressStart;
    }
    let trimmed = raw.trim();
    if toks.len() == 1 && trimmed.len() == 2 && trimmed.bytes().all(|b| b.is_ascii_alphabetic()) {
        return Segment::Place;
    }
    if COUNTRIES.contains(&norm.as_str()) {
        return Segment::Place;
    }
    if has_org {
        return Segment::Keep;
    }
    let postal = toks.iter().any(|t| t.len() >= 3 && t.bytes().filter(u8::is_ascii_digit).count() >= 3);
    let street = toks.iter().any(|t| STREET_KEYWORDS.contains(t)) && (raw.contains('#') || raw.bytes().any(|b| b.is_ascii_digit()));
    if postal || street {
        return Segment::AddressStart;
    }
    Segment::Keep
}

fn is_locality(raw: &str) -> bool {
    let norm = normalize_org(raw);
    let toks: Vec<&str> = norm.split(' ').filter(|t| !t.is_empty()).collect();
    toks.len() <= 2 && !toks.iter().any(|t| ORG_KEYWORDS.contains(t))
}

/// Split an affiliation statement into normalized organization candidates,
/// dropping address segments. Order is preserved.
pub fn extract_affiliation_candidates(raw: &str) -> Vec<String> {
    let segments: Vec<&str> = raw.split([',', ';']).collect();
    let classes: Vec<Segment> = segments.iter().map(|s| classify(s)).collect();
    let mut out: Vec<String> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        match classes[i] {
            Segment::AddressStart => break,
            Segment::Empty | Segment::Place => continue,
            Segment::Keep => {}
        }
        // A bare locality right before a region, country or postal segment.
        let next_is_place = matches!(classes.get(i + 1), Some(Segment::Place) | Some(Segment::AddressStart));
        if next_is_place && i > 0 && is_locality(seg) {
            continue;
        }
        let norm = normalize_org(seg);
        if !norm.is_empty() {
            out.push(norm);
        }
    }
    out
}

fn token_set(s: &str) -> BTreeSet<String> {
    s.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect()
}

#[derive(Debug, Clone)]
struct RegistryEntry {
    id: OpenAlexId,
    names: Vec<(String, BTreeSet<String>)>,
}

/// Matching view over the stored institutions.
#[derive(Debug, Clone, Default)]
pub struct InstitutionRegistry {
    entries: Vec<RegistryEntry>,
    exact: HashMap<String, OpenAlexId>,
    df: HashMap<String, usize>,
    postings: HashMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStage {
    Rules,
    Scorer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateMatch {
    pub candidate: String,
    pub institution: Option<OpenAlexId>,
    pub stage: Option<MatchStage>,
    pub score: f64,
}

impl InstitutionRegistry {
    pub fn new<'a>(institutions: impl IntoIterator<Item = &'a Institution>) -> Self {
        let mut reg = Self::default();
        let mut sorted: Vec<&Institution> = institutions.into_iter().collect();
        sorted.sort_by_key(|i| i.id.serial());
        for inst in sorted {
            reg.insert(inst);
        }
        reg
    }

    /// Add one institution; call in ascending serial order.
    pub fn insert(&mut self, inst: &Institution) {
        let idx = self.entries.len();
        let mut names = Vec::new();
        let mut entry_tokens = BTreeSet::new();
        for raw in std::iter::once(&inst.display_name).chain(inst.aliases.iter()) {
            let norm = normalize_org(raw);
            if norm.is_empty() || names.iter().any(|(n, _)| *n == norm) {
                continue;
            }
            self.exact.entry(norm.clone()).or_insert(inst.id);
            let toks = token_set(&norm);
            entry_tokens.extend(toks.iter().cloned());
            names.push((norm, toks));
        }
        for t in entry_tokens {
            *self.df.entry(t.clone()).or_default() += 1;
            self.postings.entry(t).or_default().push(idx);
        }
        self.entries.push(RegistryEntry { id: inst.id, names });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn idf(&self, token: &str) -> f64 {
        let n = self.entries.len() as f64;
        let df = self.df.get(token).copied().unwrap_or(0) as f64;
        ((n + 1.0) / (df + 1.0)).ln() + 1.0
    }

    /// IDF-weighted Jaccard similarity between two token sets.
    pub fn weighted_jaccard(&self, a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
        let inter: f64 = a.intersection(b).map(|t| self.idf(t)).sum();
        let union: f64 = a.union(b).map(|t| self.idf(t)).sum();
        if union == 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Exact normalized-name match.
    pub fn exact(&self, candidate: &str) -> Option<OpenAlexId> {
        self.exact.get(candidate).copied()
    }

    /// Best scorer match for a normalized candidate: `(institution, score)`.
    pub fn best_scored(&self, candidate: &str) -> Option<(OpenAlexId, f64)> {
        let toks = token_set(candidate);
        let mut seen = BTreeSet::new();
        for t in &toks {
            if let Some(p) = self.postings.get(t) {
                seen.extend(p.iter().copied());
            }
        }
        let mut best: Option<(OpenAlexId, f64)> = None;
        // `seen` iterates in insertion (= serial) order, so strict `>` keeps
        // the lowest serial on ties.
        for idx in seen {
            let entry = &self.entries[idx];
            let score = entry.names.iter().map(|(_, nt)| self.weighted_jaccard(&toks, nt)).fold(0.0, f64::max);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((entry.id, score));
            }
        }
        best
    }

    pub fn match_candidate(&self, candidate: &str, threshold: f64) -> CandidateMatch {
        if let Some(id) = self.exact(candidate) {
            return CandidateMatch { candidate: candidate.to_owned(), institution: Some(id), stage: Some(MatchStage::Rules), score: 1.0 };
        }
        match self.best_scored(candidate) {
            Some((id, score)) if score + 1e-12 >= threshold => {
                CandidateMatch { candidate: candidate.to_owned(), institution: Some(id), stage: Some(MatchStage::Scorer), score }
            }
            best => CandidateMatch {
                candidate: candidate.to_owned(),
                institution: None,
                stage: None,
                score: best.map_or(0.0, |(_, s)| s),
            },
        }
    }
}

/// Match normalized candidates; deduplicated, first-mention order.
pub fn match_institution(candidates: &[String], registry: &InstitutionRegistry, threshold: f64) -> Vec<OpenAlexId> {
    match_institution_detailed(candidates, registry, threshold).0
}

pub fn match_institution_detailed(
    candidates: &[String],
    registry: &InstitutionRegistry,
    threshold: f64,
) -> (Vec<OpenAlexId>, Vec<CandidateMatch>) {
    let mut ids = Vec::new();
    let mut details = Vec::new();
    for c in candidates {
        let m = registry.match_candidate(c, threshold);
        if let Some(id) = m.institution {
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        details.push(m);
    }
    (ids, details)
}

/// Token document frequencies, exposed for audit output.
pub fn registry_token_stats(registry: &InstitutionRegistry) -> BTreeMap<String, usize> {
    registry.df.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EntityKind;
    use chrono::NaiveDate;

    fn inst(n: u64, name: &str, aliases: &[&str]) -> Institution {
        let d = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
        Institution {
            id: OpenAlexId::new(EntityKind::Institution, n).unwrap(),
            ror: None,
            display_name: name.into(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            country_code: None,
            works_count: 0,
            created_date: d,
            updated_date: d,
        }
    }

    #[test]
    fn extraction_examples() {
        assert_eq!(
            extract_affiliation_candidates("Dept. of Physics, University of Granada, 18071 Granada, Spain"),
            vec!["department of physics", "university of granada"]
        );
        assert_eq!(
            extract_affiliation_candidates("OurResearch, 500 Westover Dr #8234, Sanford, NC, 27330 (USA)"),
            vec!["ourresearch"]
        );
        assert!(extract_affiliation_candidates("").is_empty());
        assert_eq!(extract_affiliation_candidates("University of Granada, Spain"), vec!["university of granada"]);
        assert_eq!(
            extract_affiliation_candidates("Harvard University; Cambridge, MA, USA"),
            vec!["harvard university"]
        );
        assert_eq!(extract_affiliation_candidates("Univ. Politècnica"), vec!["university politecnica"]);
    }

    #[test]
    fn exact_match_and_reordered_name() {
        let reg = InstitutionRegistry::new(&[
            inst(1, "University of Granada", &[]),
            inst(2, "University of Oslo", &[]),
            inst(3, "University of Tokyo", &[]),
            inst(4, "Institute of Physics", &[]),
        ]);
        let got = match_institution(&["university of granada".into()], &reg, 0.7);
        assert_eq!(got, vec![OpenAlexId::new(EntityKind::Institution, 1).unwrap()]);
        let m = reg.match_candidate("granada university", 0.7);
        assert_eq!(m.stage, Some(MatchStage::Scorer));
        assert_eq!(m.institution.map(|i| i.serial()), Some(1));
        let none = reg.match_candidate("department of physics", 0.7);
        assert_eq!(none.institution, None);
    }

    #[test]
    fn exact_names_score_one_under_scorer() {
        let reg = InstitutionRegistry::new(&[inst(1, "University of Granada", &["UGR"]), inst(2, "MIT", &[])]);
        for name in ["university of granada", "ugr", "mit"] {
            let id = reg.exact(name).unwrap();
            let (best, score) = reg.best_scored(name).unwrap();
            assert_eq!(best, id);
            assert!((score - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn results_are_deduplicated_in_first_mention_order() {
        let reg = InstitutionRegistry::new(&[inst(1, "Alpha University", &[]), inst(2, "Beta Institute", &[])]);
        let got = match_institution(
            &["beta institute".into(), "alpha university".into(), "beta institute".into()],
            &reg,
            0.7,
        );
        assert_eq!(got.iter().map(|i| i.serial()).collect::<Vec<_>>(), vec![2, 1]);
    }
}
