//! Deterministic synthetic data for tests, benchmarks and the bundled
//! fixture files: checksum-valid identifiers, Crossref-style corpora,
//! labeled resolution fixtures and a cursored stub listing server.
//!
//! Everything here is a pure function of its seed.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::{Query, State as AxumState};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::concepts::{ConceptLine, KeywordSpec};
use crate::identifiers::{
    issn_check, mod11_2_check, ror_checksum, validate_issn, validate_orcid, validate_ror, Issn, Orcid, Ror,
    CROCKFORD_ALPHABET,
};
use crate::model::{EntityKind, Institution, OpenAlexId};

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `crates/core/fixtures`.
pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 1).expect("valid date")
}

// ---------------------------------------------------------------- identifiers

pub fn random_orcid(rng: &mut impl Rng) -> Orcid {
    let mut digits = [0u8; 15];
    // ORCID iDs are issued from the 0000-0001..0000-0003 blocks.
    digits[7] = rng.gen_range(1..=3);
    for d in digits.iter_mut().skip(8) {
        *d = rng.gen_range(0..10);
    }
    let body: String = digits.iter().map(|d| char::from(b'0' + d)).collect();
    let raw = format!("{body}{}", mod11_2_check(&digits));
    validate_orcid(&raw).expect("generated ORCID is valid")
}

pub fn random_issn(rng: &mut impl Rng) -> Issn {
    let digits: Vec<u8> = (0..7).map(|_| rng.gen_range(0..10)).collect();
    let body: String = digits.iter().map(|d| char::from(b'0' + d)).collect();
    validate_issn(&format!("{body}{}", issn_check(&digits))).expect("generated ISSN is valid")
}

pub fn random_ror(rng: &mut impl Rng) -> Ror {
    let alphabet: Vec<char> = CROCKFORD_ALPHABET.chars().collect();
    let body: String = std::iter::once('0').chain((0..6).map(|_| alphabet[rng.gen_range(0..alphabet.len())])).collect();
    let check = ror_checksum(&body).expect("alphabet characters");
    validate_ror(&format!("{body}{check:02}")).expect("generated ROR is valid")
}

// ---------------------------------------------------------------- words and names

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "kr", "st", "tr", "th"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "ou"];
const CODAS: &[&str] = &["", "", "n", "r", "l", "s", "m", "x", "nd", "rk"];

/// A pronounceable lowercase pseudo-word of `syllables` syllables.
pub fn synthetic_word(rng: &mut impl Rng, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).expect("non-empty"));
        w.push_str(VOWELS.choose(rng).expect("non-empty"));
    }
    w.push_str(CODAS.choose(rng).expect("non-empty"));
    w
}

pub fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// `n` distinct pseudo-words, none in `avoid`.
fn distinct_words(rng: &mut impl Rng, n: usize, syllables: usize, avoid: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = synthetic_word(rng, syllables);
        if avoid.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

pub const GIVEN_NAMES: &[&str] = &[
    "Ana", "Bruno", "Carla", "Daniel", "Elena", "Farid", "Greta", "Hiro", "Ines", "Jonas", "Kavya", "Lars",
    "Mei", "Nadia", "Omar", "Priya", "Quentin", "Rosa", "Sven", "Tala", "Umar", "Vera", "Wen", "Ximena", "Yusuf",
    "Zara", "Amir", "Beatriz", "Chen", "Dmitri", "Esra", "Felix", "Gaia", "Hugo", "Ida", "Jun", "Kofi", "Lena",
    "Mateo", "Noor", "Olga", "Pablo", "Rania", "Sanjay", "Tomas", "Ulla", "Viktor", "Wanda", "Yara", "Zoltan",
];

const TITLE_WORDS: &[&str] = &[
    "analysis", "adaptive", "approach", "assessment", "benchmark", "bayesian", "causal", "characterization",
    "clinical", "comparative", "computational", "dynamics", "distributed", "efficient", "empirical", "estimation",
    "evaluation", "evidence", "framework", "genomic", "graph", "heterogeneous", "inference", "integrated",
    "large", "learning", "longitudinal", "measurement", "method", "model", "modeling", "network", "novel",
    "observational", "optimal", "patterns", "population", "prediction", "probabilistic", "quantitative",
    "robust", "sampling", "scalable", "spatial", "statistical", "structure", "study", "survey", "systematic",
    "temporal", "theory", "transfer", "uncertainty", "validation", "variation", "review", "data", "open",
    "scholarly", "index", "metadata", "citation", "repository", "archive", "protocol", "signal", "response",
    "regulation", "mechanism", "interaction", "outcomes", "trial", "cohort", "exposure", "imaging", "design",
];

const DEPARTMENTS: &[&str] = &[
    "Physics", "Chemistry", "Biology", "Mathematics", "Computer Science", "Economics", "Medicine", "History",
    "Linguistics", "Geography",
];

const COUNTRIES: &[(&str, &str)] = &[
    ("ES", "Spain"), ("US", "USA"), ("GB", "United Kingdom"), ("DE", "Germany"), ("FR", "France"),
    ("JP", "Japan"), ("BR", "Brazil"), ("IN", "India"), ("CA", "Canada"), ("AU", "Australia"),
];

fn title_words(rng: &mut impl Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| (*TITLE_WORDS.choose(rng).expect("non-empty")).to_owned()).collect()
}

fn sentence_case(words: &[String]) -> String {
    let mut s = words.join(" ");
    if let Some(f) = s.get(..1) {
        let up = f.to_uppercase();
        s.replace_range(..1, &up);
    }
    s
}

// ---------------------------------------------------------------- venues and the ISSN-L table

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticVenue {
    pub name: String,
    pub print: Issn,
    pub electronic: Issn,
}

impl SyntheticVenue {
    pub fn issn_l(&self) -> &Issn {
        &self.print
    }
}

pub const VENUE_POOL_SIZE: usize = 60;

/// The fixed journal pool shared by the synthetic corpora and `issn_linking.csv`.
pub fn venue_pool() -> Vec<SyntheticVenue> {
    let mut r = rng(0x7e11_00e5);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(VENUE_POOL_SIZE);
    let mut names = BTreeSet::new();
    while out.len() < VENUE_POOL_SIZE {
        let print = random_issn(&mut r);
        let electronic = random_issn(&mut r);
        if print == electronic || !seen.insert(print.clone()) || !seen.insert(electronic.clone()) {
            continue;
        }
        let name = match out.len() % 3 {
            0 => format!("Journal of {} {}", capitalize(&synthetic_word(&mut r, 2)), capitalize(TITLE_WORDS.choose(&mut r).expect("words"))),
            1 => format!("{} Letters", capitalize(&synthetic_word(&mut r, 3))),
            _ => format!("Annals of {}", capitalize(&synthetic_word(&mut r, 3))),
        };
        if !names.insert(name.clone()) {
            continue;
        }
        out.push(SyntheticVenue { name, print, electronic });
    }
    out
}

/// `ISSN,ISSN-L` rows for every pool venue: print and electronic both link to print.
pub fn issn_linking_csv() -> String {
    let mut rows: Vec<(String, String)> = Vec::new();
    for v in venue_pool() {
        rows.push((v.print.to_string(), v.issn_l().to_string()));
        rows.push((v.electronic.to_string(), v.issn_l().to_string()));
    }
    rows.sort();
    let mut out = String::from("ISSN,ISSN-L\n");
    for (a, b) in rows {
        out.push_str(&format!("{a},{b}\n"));
    }
    out
}

// ---------------------------------------------------------------- institutions

pub const INSTITUTION_COUNT: usize = 50;

fn institution(serial: u64, ror: Ror, name: &str, aliases: &[String], country: &str) -> Institution {
    Institution {
        id: OpenAlexId::new(EntityKind::Institution, serial).expect("positive"),
        ror: Some(ror),
        display_name: name.to_owned(),
        aliases: aliases.to_vec(),
        country_code: Some(country.to_owned()),
        works_count: 0,
        created_date: fixture_date(),
        updated_date: fixture_date(),
    }
}

/// Place name, and the city it sits in, for synthetic institution `i`.
#[derive(Debug, Clone)]
pub struct ToyInstitution {
    pub record: Institution,
    pub place: String,
    pub country_name: String,
    /// 0 university, 1 institute of technology, 2 medical center,
    /// 3 foundation, 4 national laboratory, 5 college; 6 named real-world entries.
    pub pattern: usize,
}

/// The 50-entry toy registry: two real-world names plus 48 synthetic ones.
pub fn toy_institutions() -> Vec<ToyInstitution> {
    let mut r = rng(0x1257);
    let mut avoid = BTreeSet::new();
    let mut out = Vec::with_capacity(INSTITUTION_COUNT);
    let mut rors = BTreeSet::new();
    let mut next_ror = |r: &mut FixtureRng| loop {
        let ror = random_ror(r);
        if rors.insert(ror.clone()) {
            return ror;
        }
    };
    out.push(ToyInstitution {
        record: institution(1, next_ror(&mut r), "University of Granada", &["Universidad de Granada".into(), "UGR".into()], "ES"),
        place: "Granada".into(),
        country_name: "Spain".into(),
        pattern: 6,
    });
    out.push(ToyInstitution {
        record: institution(2, next_ror(&mut r), "OurResearch", &["Our Research".into(), "Impactstory".into()], "US"),
        place: "Vancouver".into(),
        country_name: "Canada".into(),
        pattern: 6,
    });
    avoid.insert("granada".to_owned());
    let places = distinct_words(&mut r, INSTITUTION_COUNT, 3, &mut avoid);
    for i in 2..INSTITUTION_COUNT {
        let p = capitalize(&places[i]);
        let pattern = (i - 2) % 6;
        let (name, aliases): (String, Vec<String>) = match pattern {
            0 => (format!("University of {p}"), vec![format!("Universidad de {p}")]),
            1 => (format!("{p} Institute of Technology"), vec![format!("{p} Tech")]),
            2 => (format!("{p} Medical Center"), vec![format!("{p} Hospital")]),
            3 => (format!("{p} Foundation"), vec![]),
            4 => (format!("National Laboratory of {p}"), vec![format!("{p} National Lab")]),
            _ => (format!("{p} College"), vec![]),
        };
        let (cc, cname) = COUNTRIES[i % COUNTRIES.len()];
        out.push(ToyInstitution {
            record: institution(i as u64 + 1, next_ror(&mut r), &name, &aliases, cc),
            place: p,
            country_name: cname.to_owned(),
            pattern,
        });
    }
    out
}

pub fn institutions_toy_jsonl() -> String {
    toy_institutions()
        .iter()
        .map(|t| serde_json::to_string(&t.record).expect("serializes") + "\n")
        .collect()
}

/// Parse an institution registry file: one `Institution` record per line.
pub fn read_institutions_jsonl(text: &str) -> Result<Vec<Institution>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, Deserialize)]
pub struct LabeledAffiliation {
    pub affiliation: String,
    /// Institutions a careful human would assign, in mention order.
    pub expected: Vec<OpenAlexId>,
    /// Every expected institution appears verbatim (up to normalization)
    /// as a segment of the string.
    pub exact: bool,
}

/// 100 affiliation strings labeled against [`toy_institutions`].
///
/// 40 decorated exact names, 25 reworded names, 5 misspelled names, 20
/// organizations outside the registry and 10 two-institution strings.
pub fn labeled_affiliations() -> Vec<LabeledAffiliation> {
    let insts = toy_institutions();
    let mut r = rng(0xaff1);
    let mut out = Vec::with_capacity(100);
    let dept = |r: &mut FixtureRng| *DEPARTMENTS.choose(r).expect("non-empty");
    for k in 0..40 {
        let t = &insts[k % insts.len()];
        let names: Vec<&String> = std::iter::once(&t.record.display_name).chain(t.record.aliases.iter()).collect();
        let name = names[k % names.len()].clone();
        let name = match k % 4 {
            0 => name,
            1 => name.to_uppercase(),
            2 => name.replace("University", "Univ.").replace("Institute", "Inst."),
            _ => name.to_lowercase(),
        };
        let s = match k % 5 {
            0 => format!("Department of {}, {name}, {}, {}", dept(&mut r), t.place, t.country_name),
            1 => format!("{name}, {}", t.country_name),
            2 => format!("Dept. of {}, {name}, 18071 {}, {}", dept(&mut r), t.place, t.country_name),
            3 => name,
            _ => format!("{name}; {} {}", r.gen_range(100..999), t.place),
        };
        out.push(LabeledAffiliation { affiliation: s, expected: vec![t.record.id], exact: true });
    }
    for k in 0..25 {
        let t = &insts[2 + (k * 7) % (insts.len() - 2)];
        let p = &t.place;
        let s = match t.pattern {
            0 => format!("{p} University"),
            1 => format!("Institute of Technology {p}"),
            2 => format!("{p} Center Medical"),
            3 => format!("Foundation {p}"),
            4 => format!("{p} National Laboratory"),
            _ => format!("College {p}"),
        };
        let s = if k % 2 == 0 { format!("{s}, {}", t.country_name) } else { s };
        out.push(LabeledAffiliation { affiliation: s, expected: vec![t.record.id], exact: false });
    }
    for k in 0..5 {
        let t = &insts[3 + k * 9];
        let mut name = t.record.display_name.clone();
        // Drop one letter from the place name.
        let pos = name.find(&t.place).expect("place in name") + 2;
        name.remove(pos);
        out.push(LabeledAffiliation { affiliation: name, expected: vec![t.record.id], exact: false });
    }
    let mut avoid: BTreeSet<String> = insts.iter().map(|t| t.place.to_lowercase()).collect();
    let others = distinct_words(&mut r, 20, 3, &mut avoid);
    for (k, w) in others.iter().enumerate() {
        let w = capitalize(w);
        let s = match k % 5 {
            0 => format!("University of {w}, {}", COUNTRIES[k % COUNTRIES.len()].1),
            1 => format!("{w} Widget Corporation"),
            2 => format!("Department of {}, {w} Polytechnic", dept(&mut r)),
            3 => "Independent researcher".to_owned(),
            _ => format!("{w} Observatory, {w}, {}", COUNTRIES[(k + 3) % COUNTRIES.len()].1),
        };
        out.push(LabeledAffiliation { affiliation: s, expected: vec![], exact: false });
    }
    for k in 0..10 {
        let a = &insts[(k * 5 + 1) % insts.len()];
        let b = &insts[(k * 5 + 3) % insts.len()];
        out.push(LabeledAffiliation {
            affiliation: format!("{}; {}, {}", a.record.display_name, b.record.display_name, b.country_name),
            expected: vec![a.record.id, b.record.id],
            exact: true,
        });
    }
    out
}

pub fn affiliations_labeled_jsonl() -> String {
    labeled_affiliations().iter().map(|a| serde_json::to_string(a).expect("serializes") + "\n").collect()
}

// ---------------------------------------------------------------- concept trees

fn concept_id(serial: u64) -> OpenAlexId {
    OpenAlexId::new(EntityKind::Concept, serial).expect("positive")
}

fn line(serial: u64, wikidata: u64, name: &str, level: u8, parents: &[u64], keywords: Vec<KeywordSpec>) -> ConceptLine {
    ConceptLine {
        id: concept_id(serial),
        wikidata: format!("Q{wikidata}"),
        display_name: name.to_owned(),
        level,
        parents: parents.iter().map(|p| concept_id(*p)).collect(),
        keywords,
    }
}

fn bare(words: &[&str]) -> Vec<KeywordSpec> {
    words.iter().map(|w| KeywordSpec::Bare((*w).to_owned())).collect()
}

/// A hand-written 20-concept tree over five roots.
pub fn tree_toy_lines() -> Vec<ConceptLine> {
    vec![
        line(1, 9_000_001, "Computer science", 0, &[], bare(&["computer", "computing", "software"])),
        line(2, 9_000_002, "Biology", 0, &[], bare(&["biology", "biological", "organism"])),
        line(3, 9_000_003, "Medicine", 0, &[], bare(&["medicine", "clinical", "patient", "patients"])),
        line(4, 9_000_004, "Physics", 0, &[], bare(&["physics", "physical"])),
        line(5, 9_000_005, "Mathematics", 0, &[], bare(&["mathematics", "theorem", "proof"])),
        line(6, 9_000_006, "Machine learning", 1, &[1], bare(&["learning", "training", "classifier"])),
        line(7, 9_000_007, "Databases", 1, &[1], bare(&["database", "query", "index", "metadata"])),
        line(8, 9_000_008, "Information retrieval", 1, &[1], bare(&["retrieval", "search", "ranking", "citation"])),
        line(9, 9_000_009, "Genetics", 1, &[2], bare(&["gene", "genetic", "genome", "genomic"])),
        line(10, 9_000_010, "Ecology", 1, &[2], bare(&["ecology", "species", "habitat"])),
        line(11, 9_000_011, "Oncology", 1, &[3], bare(&["cancer", "tumor", "oncology"])),
        line(12, 9_000_012, "Epidemiology", 1, &[3], bare(&["cohort", "incidence", "exposure", "epidemiology"])),
        line(13, 9_000_013, "Optics", 1, &[4], bare(&["optical", "laser", "photon"])),
        line(14, 9_000_014, "Statistics", 1, &[5], bare(&["statistical", "statistics", "regression", "bayesian"])),
        line(15, 9_000_015, "Deep learning", 2, &[6], bare(&["deep", "neural", "convolutional"])),
        line(16, 9_000_016, "Bibliometrics", 2, &[8, 7], bare(&["bibliometric", "scholarly", "scientometrics"])),
        line(17, 9_000_017, "Gene expression", 2, &[9], bare(&["expression", "transcription", "rna"])),
        line(18, 9_000_018, "Clinical trial", 2, &[12, 14], bare(&["trial", "randomized", "placebo"])),
        line(19, 9_000_019, "Bayesian inference", 2, &[14], bare(&["posterior", "prior", "inference"])),
        line(20, 9_000_020, "Convolutional network", 3, &[15], vec![
            KeywordSpec::Weighted { token: "convolution".into(), weight: 1.0 },
            KeywordSpec::Weighted { token: "image".into(), weight: 0.5 },
        ]),
    ]
}

/// Nodes per level of the full-shape tree: 19 roots and five descendant layers.
pub const FULL_SHAPE_LEVELS: [usize; 6] = [19, 76, 190, 150, 80, 25];

/// A synthetic tree with 19 roots and depth 5. Names are pseudo-words; each
/// concept's keywords are its lowercased name tokens. About one concept in
/// eight beyond level 1 gets a second parent from another branch.
pub fn tree_full_shape_lines() -> Vec<ConceptLine> {
    let mut r = rng(0xc0ce97);
    let mut avoid = BTreeSet::new();
    let total: usize = FULL_SHAPE_LEVELS.iter().sum();
    let words = distinct_words(&mut r, total * 2, 2, &mut avoid);
    let mut lines: Vec<ConceptLine> = Vec::with_capacity(total);
    let mut by_level: Vec<Vec<u64>> = vec![Vec::new(); FULL_SHAPE_LEVELS.len()];
    let mut serial = 0u64;
    for (level, &count) in FULL_SHAPE_LEVELS.iter().enumerate() {
        for k in 0..count {
            serial += 1;
            let (a, b) = (&words[2 * (serial as usize - 1)], &words[2 * (serial as usize - 1) + 1]);
            let name = if level == 0 { capitalize(a) } else { format!("{} {b}", capitalize(a)) };
            let mut parents = Vec::new();
            if level > 0 {
                let above = &by_level[level - 1];
                // Spread children evenly over the level above.
                parents.push(above[k * above.len() / count]);
                if level >= 2 && r.gen_ratio(1, 8) {
                    let l = r.gen_range(0..level);
                    let extra = *by_level[l].choose(&mut r).expect("levels are non-empty");
                    if !parents.contains(&extra) {
                        parents.push(extra);
                    }
                }
            }
            let keywords = if level == 0 {
                vec![KeywordSpec::Bare(a.clone())]
            } else {
                vec![KeywordSpec::Bare(a.clone()), KeywordSpec::Weighted { token: b.clone(), weight: 0.5 }]
            };
            lines.push(line(serial, 8_000_000 + serial, &name, level as u8, &parents, keywords));
            by_level[level].push(serial);
        }
    }
    lines
}

pub fn to_jsonl<T: serde::Serialize>(items: &[T]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("serializes") + "\n").collect()
}

/// Keyword tokens of the full-shape tree, in file order.
pub fn full_shape_keywords() -> Vec<String> {
    tree_full_shape_lines()
        .into_iter()
        .flat_map(|l| l.keywords)
        .map(|k| match k {
            KeywordSpec::Bare(t) => t,
            KeywordSpec::Weighted { token, .. } => token,
        })
        .collect()
}

// ---------------------------------------------------------------- synthetic Crossref corpus

#[derive(Debug, Clone)]
struct Person {
    given: String,
    family: String,
    orcid: Option<Orcid>,
}

impl Person {
    fn json(&self, rng: &mut impl Rng, affiliation: Option<String>) -> Value {
        let given = if rng.gen_ratio(1, 4) { format!("{}.", &self.given[..1]) } else { self.given.clone() };
        let mut a = json!({"given": given, "family": self.family, "sequence": "additional"});
        if let Some(o) = &self.orcid {
            if rng.gen_ratio(4, 5) {
                a["ORCID"] = json!(format!("https://orcid.org/{o}"));
            }
        }
        if let Some(aff) = affiliation {
            a["affiliation"] = json!([{"name": aff}]);
        }
        a
    }
}

struct Lab {
    members: Vec<usize>,
    venues: Vec<usize>,
    institution: usize,
}

fn affiliation_string(rng: &mut impl Rng, t: &ToyInstitution) -> String {
    match rng.gen_range(0..3) {
        0 => format!("Department of {}, {}, {}", DEPARTMENTS.choose(rng).expect("non-empty"), t.record.display_name, t.country_name),
        1 => format!("{}, {}, {}", t.record.display_name, t.place, t.country_name),
        _ => t.record.display_name.clone(),
    }
}

/// DOI of record `i` in a corpus generated with `seed`.
pub fn synthetic_doi(seed: u64, i: usize) -> String {
    format!("10.{}/syn.{seed:x}.{i}", 5000 + i % 97)
}

/// `n` Crossref-style work records. Authors come from labs of about five
/// people that publish in a few pool venues with a home institution;
/// titles mix generic vocabulary with full-shape tree keywords; references
/// point mostly backwards, sometimes forwards and sometimes outside the
/// corpus.
pub fn synthetic_crossref(n: usize, seed: u64) -> Vec<Value> {
    let mut r = rng(seed);
    let venues = venue_pool();
    let insts = toy_institutions();
    let keywords = full_shape_keywords();
    let n_people = (n / 3).max(12);
    let mut avoid = BTreeSet::new();
    let families = distinct_words(&mut r, (n_people / 3).max(8), 2, &mut avoid);
    let people: Vec<Person> = (0..n_people)
        .map(|_| Person {
            given: (*GIVEN_NAMES.choose(&mut r).expect("non-empty")).to_owned(),
            family: capitalize(families.choose(&mut r).expect("non-empty")),
            orcid: r.gen_ratio(2, 5).then(|| random_orcid(&mut r)),
        })
        .collect();
    // ORCIDs must be unique across people.
    let mut seen_orcids = BTreeSet::new();
    let people: Vec<Person> = people
        .into_iter()
        .map(|mut p| {
            if let Some(o) = &p.orcid {
                if !seen_orcids.insert(o.clone()) {
                    p.orcid = None;
                }
            }
            p
        })
        .collect();
    let mut order: Vec<usize> = (0..n_people).collect();
    order.shuffle(&mut r);
    let labs: Vec<Lab> = order
        .chunks(5)
        .map(|c| Lab {
            members: c.to_vec(),
            venues: (0..3).map(|_| r.gen_range(0..venues.len())).collect(),
            institution: r.gen_range(0..insts.len()),
        })
        .collect();
    let base = fixture_date();
    let types = ["journal-article", "journal-article", "journal-article", "journal-article", "proceedings-article", "book-chapter", "posted-content"];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lab = &labs[r.gen_range(0..labs.len())];
        let len = r.gen_range(4..8);
        let mut words = title_words(&mut r, len);
        for _ in 0..2 {
            let at = r.gen_range(0..=words.len());
            words.insert(at, keywords.choose(&mut r).expect("non-empty").clone());
        }
        let title = sentence_case(&words);
        let mut members = lab.members.clone();
        members.shuffle(&mut r);
        members.truncate(r.gen_range(1..=members.len().min(4)));
        let authors: Vec<Value> = members
            .iter()
            .enumerate()
            .map(|(pos, &m)| {
                let aff = r.gen_bool(0.5).then(|| affiliation_string(&mut r, &insts[lab.institution]));
                let mut a = people[m].json(&mut r, aff);
                if pos == 0 {
                    a["sequence"] = json!("first");
                }
                a
            })
            .collect();
        let v = &venues[lab.venues[r.gen_range(0..lab.venues.len())]];
        let mut refs = Vec::new();
        if i > 0 {
            for _ in 0..r.gen_range(0..6) {
                refs.push(json!({"key": format!("ref{}", refs.len()), "DOI": synthetic_doi(seed, r.gen_range(0..i))}));
            }
        }
        if r.gen_ratio(1, 10) && i + 1 < n {
            refs.push(json!({"key": "fwd", "DOI": synthetic_doi(seed, r.gen_range(i + 1..n.min(i + 50)))}));
        }
        if r.gen_ratio(1, 5) {
            refs.push(json!({"key": "ext", "DOI": format!("10.9{:03}/external.{}", r.gen_range(100..999), r.gen_range(0..100_000))}));
        }
        if r.gen_ratio(1, 8) {
            refs.push(json!({"key": "unstructured", "unstructured": "Personal communication."}));
        }
        let ty = types[r.gen_range(0..types.len())];
        let indexed = base + Duration::days((i % 300) as i64);
        let mut rec = json!({
            "DOI": synthetic_doi(seed, i),
            "title": [title],
            "type": ty,
            "issued": {"date-parts": [[r.gen_range(2010..2024), r.gen_range(1..13)]]},
            "indexed": {"date-parts": [[indexed.year(), indexed.month(), indexed.day()]]},
            "author": authors,
            "container-title": [v.name],
            "ISSN": if r.gen_bool(0.5) { json!([v.print, v.electronic]) } else { json!([v.electronic]) },
            "URL": format!("https://doi.org/{}", synthetic_doi(seed, i)),
            "reference": refs,
        });
        if r.gen_bool(0.6) {
            let len = r.gen_range(15..40);
            let abs = title_words(&mut r, len).join(" ");
            let kw = keywords.choose(&mut r).expect("non-empty");
            rec["abstract"] = json!(format!("<jats:p>{} {kw}.</jats:p>", sentence_case(&[abs])));
        }
        if r.gen_bool(0.5) {
            rec["license"] = json!([{"URL": "https://creativecommons.org/licenses/by/4.0/"}]);
        }
        out.push(rec);
    }
    out
}

// ---------------------------------------------------------------- dedup corpus

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct DedupEntry {
    /// `crossref` or `repository`.
    pub source: String,
    /// Pair index for preprint and version-of-record copies; absent for decoys.
    pub pair: Option<usize>,
    pub role: String,
    pub record: Value,
}

const DIACRITIC_FAMILIES: &[(&str, &str)] = &[
    ("Müller", "Muller"), ("Peña", "Pena"), ("Ødegård", "Odegard"), ("Çelik", "Celik"), ("Nuñez", "Nunez"),
    ("Søren", "Soren"), ("Lefèvre", "Lefevre"), ("Dvořák", "Dvorak"), ("Gómez", "Gomez"), ("Björk", "Bjork"),
];

/// 20 preprint / version-of-record pairs plus 20 decoys: 60 records.
/// Pair copies differ only in punctuation, case and diacritics. Even
/// decoys change one title word, odd decoys keep the title under another
/// first author.
pub fn dedup_corpus() -> Vec<DedupEntry> {
    let mut r = rng(0xdedb);
    let venues = venue_pool();
    let mut out = Vec::with_capacity(60);
    let mut used_titles = BTreeSet::new();
    for k in 0..20 {
        let words = loop {
            let len = r.gen_range(6..10);
            let w = title_words(&mut r, len);
            if used_titles.insert(w.join(" ")) {
                break w;
            }
        };
        let (fam_dia, fam_plain) = DIACRITIC_FAMILIES[k % DIACRITIC_FAMILIES.len()];
        let given = GIVEN_NAMES[k];
        let coauthor = GIVEN_NAMES[k + 20];
        let split = words.len() / 2;
        let preprint_title = format!("{}: {}", sentence_case(&words[..split].to_vec()), words[split..].join(" "));
        let vor_title = words.iter().map(|w| capitalize(w)).collect::<Vec<_>>().join(" ").replacen(' ', " — ", 1) + ".";
        let (pre_family, vor_family) = if k % 2 == 0 { (fam_plain, fam_dia) } else { (fam_dia, fam_plain) };
        let co_family = capitalize(&synthetic_word(&mut r, 2));
        let arxiv = format!("2201.{:05}", 100 + k);
        let preprint = json!({
            "id": format!("arXiv:{arxiv}"),
            "title": [preprint_title],
            "type": "posted-content",
            "issued": {"date-parts": [[2022, 1]]},
            "indexed": {"date-parts": [[2022, 1, 15]]},
            "author": [{"given": given, "family": pre_family}, {"given": coauthor, "family": co_family}],
            "container-title": ["arXiv"],
            "URL": format!("https://arxiv.org/abs/{arxiv}"),
        });
        let v = &venues[k % venues.len()];
        let doi = format!("10.7777/vor.{k}");
        let vor = json!({
            "DOI": doi,
            "title": [vor_title],
            "type": "journal-article",
            "issued": {"date-parts": [[2022, 6]]},
            "indexed": {"date-parts": [[2022, 6, 20]]},
            "author": [{"given": given, "family": vor_family}, {"given": coauthor, "family": co_family}],
            "container-title": [v.name],
            "ISSN": [v.print],
            "URL": format!("https://doi.org/{doi}"),
            "license": [{"URL": "https://creativecommons.org/licenses/by/4.0/"}],
        });
        let pre_entry = DedupEntry { source: "repository".into(), pair: Some(k), role: "preprint".into(), record: preprint };
        let vor_entry = DedupEntry { source: "crossref".into(), pair: Some(k), role: "vor".into(), record: vor };
        if k % 2 == 0 {
            out.push(pre_entry);
            out.push(vor_entry);
        } else {
            out.push(vor_entry);
            out.push(pre_entry);
        }
        let (decoy_title, decoy_family) = if k % 2 == 0 {
            let mut w = words.clone();
            let at = r.gen_range(0..w.len());
            let replacement = loop {
                let c = (*TITLE_WORDS.choose(&mut r).expect("non-empty")).to_owned();
                if c != w[at] {
                    break c;
                }
            };
            w[at] = replacement;
            (sentence_case(&w), fam_plain.to_owned())
        } else {
            (sentence_case(&words), capitalize(&synthetic_word(&mut r, 3)))
        };
        let ddoi = format!("10.7777/decoy.{k}");
        let decoy = json!({
            "DOI": ddoi,
            "title": [decoy_title],
            "type": "journal-article",
            "issued": {"date-parts": [[2021, 3]]},
            "indexed": {"date-parts": [[2022, 3, 1]]},
            "author": [{"given": GIVEN_NAMES[(k + 7) % GIVEN_NAMES.len()], "family": decoy_family}],
            "container-title": [v.name],
            "ISSN": [v.print],
        });
        out.push(DedupEntry { source: "crossref".into(), pair: None, role: "decoy".into(), record: decoy });
    }
    out
}

// ---------------------------------------------------------------- author fixture

/// Person labels ride along on each author object under this key.
pub const TRUTH_KEY: &str = "_truth";

/// ~200 labeled author mentions across Crossref-style records.
///
/// Twelve labs of four people publish six papers each in a home venue,
/// with one in four papers going to a shared venue. Labs 0-5 and 6-11
/// share pairs of homonyms. Labs 10 and 11 share a venue and each holds a
/// "Maria Garcia" with her own ORCID on every mention. Two people move
/// labs halfway through without an ORCID.
pub fn labeled_author_records() -> Vec<Value> {
    let mut r = rng(0xa071);
    let venues = venue_pool();
    let mut avoid = BTreeSet::new();
    let families = distinct_words(&mut r, 48, 2, &mut avoid);
    let shared_venue = &venues[59];
    struct P {
        truth: String,
        given: String,
        family: String,
        orcid: Option<Orcid>,
        always_orcid: bool,
    }
    let mut labs: Vec<Vec<P>> = Vec::new();
    let mut orcids = BTreeSet::new();
    for lab in 0..12 {
        let mut members = Vec::new();
        for m in 0..4 {
            let idx = lab * 4 + m;
            let (given, family) = if m == 0 && lab >= 6 {
                // Homonym of lab (lab - 6)'s first member.
                (GIVEN_NAMES[(lab - 6) * 4 % GIVEN_NAMES.len()].to_owned(), capitalize(&families[(lab - 6) * 4]))
            } else {
                (GIVEN_NAMES[idx % GIVEN_NAMES.len()].to_owned(), capitalize(&families[idx]))
            };
            let garcia = m == 1 && (lab == 10 || lab == 11);
            let (given, family) = if garcia { ("Maria".to_owned(), "Garcia".to_owned()) } else { (given, family) };
            let orcid = (garcia || idx % 5 == 2).then(|| loop {
                let o = random_orcid(&mut r);
                if orcids.insert(o.clone()) {
                    break o;
                }
            });
            members.push(P { truth: format!("P{idx}"), given, family, orcid, always_orcid: garcia });
        }
        labs.push(members);
    }
    let mut records = Vec::new();
    let mut paper = 0usize;
    for (lab_idx, lab) in labs.iter().enumerate() {
        let home = if lab_idx == 10 || lab_idx == 11 { shared_venue } else { &venues[40 + lab_idx] };
        for p in 0..6 {
            let mut idx: Vec<usize> = (0..4).collect();
            idx.shuffle(&mut r);
            // The lab's first member is on every paper so homonyms recur.
            let mut chosen: Vec<usize> = idx.into_iter().take(r.gen_range(2..=3)).collect();
            if !chosen.contains(&0) {
                chosen[0] = 0;
            }
            if p % 2 == 1 && !chosen.contains(&1) {
                chosen.push(1);
            }
            let venue = if p == 3 && lab_idx < 10 { &venues[58] } else { home };
            let mut authors = Vec::new();
            for &m in &chosen {
                let person = &lab[m];
                // Members 3 of labs 2 and 7 move to labs 3 and 8 after paper 2.
                let person = if m == 3 && (lab_idx == 3 || lab_idx == 8) && p >= 3 { &labs[lab_idx - 1][3] } else { person };
                let given = if r.gen_ratio(1, 3) { format!("{}.", &person.given[..1]) } else { person.given.clone() };
                let mut a = json!({"given": given, "family": person.family, TRUTH_KEY: person.truth});
                if let Some(o) = &person.orcid {
                    if person.always_orcid || r.gen_ratio(3, 4) {
                        a["ORCID"] = json!(o.to_string());
                    }
                }
                authors.push(a);
            }
            let title = sentence_case(&title_words(&mut r, 7));
            records.push(json!({
                "DOI": format!("10.8888/auth.{paper}"),
                "title": [title],
                "type": "journal-article",
                "issued": {"date-parts": [[2015 + p as i32, 1]]},
                "author": authors,
                "container-title": [venue.name],
                "ISSN": [venue.print],
            }));
            paper += 1;
        }
    }
    records
}

pub fn authors_labeled_jsonl() -> String {
    to_jsonl(&labeled_author_records())
}

// ---------------------------------------------------------------- small fixtures

pub const KNOWN_DOI: &str = "10.1145/2740908.2742839";

/// Ten hand-shaped Crossref records: three from 2022, two from 2021.
pub fn works_10() -> Vec<Value> {
    let venues = venue_pool();
    let v = |i: usize| (venues[i].name.clone(), venues[i].print.to_string());
    let (v0, i0) = v(0);
    let (v1, i1) = v(1);
    vec![
        json!({"DOI": KNOWN_DOI, "title": ["An Overview of Microsoft Academic Service (MAS) and Applications"],
            "type": "proceedings-article", "issued": {"date-parts": [[2015, 5]]},
            "author": [{"given": "Arnab", "family": "Sinha"}, {"given": "Zhihong", "family": "Shen"}, {"given": "Yang", "family": "Song"}],
            "container-title": ["Proceedings of the 24th International Conference on World Wide Web"]}),
        json!({"DOI": "10.5555/fix.2022.1", "title": ["Open metadata for scholarly citation retrieval"], "type": "journal-article",
            "issued": {"date-parts": [[2022, 3]]},
            "author": [{"given": "Heather", "family": "Piwowar", "affiliation": [{"name": "OurResearch"}]},
                       {"given": "Jason", "family": "Priem", "ORCID": "http://orcid.org/0000-0002-1825-0097", "affiliation": [{"name": "OurResearch"}]}],
            "container-title": [v0], "ISSN": [i0.clone()],
            "reference": [{"DOI": KNOWN_DOI}, {"DOI": "10.5555/fix.2021.1"}],
            "abstract": "<jats:p>A scholarly metadata index with citation search.</jats:p>"}),
        json!({"DOI": "10.5555/fix.2022.2", "title": ["Deep neural learning for clinical trial ranking"], "type": "journal-article",
            "issued": {"date-parts": [[2022, 7]]},
            "author": [{"given": "Richard", "family": "Orr", "affiliation": ["University of Granada, Spain"]}],
            "container-title": [v1.clone()], "ISSN": [i1.clone()], "reference": [{"DOI": "10.5555/fix.2022.1"}]}),
        json!({"DOI": "10.5555/fix.2022.3", "title": ["Gene expression in tumor cohorts"], "type": "journal-article",
            "issued": {"date-parts": [[2022, 11]]},
            "author": [{"given": "Ana", "family": "Lopez"}, {"given": "Richard", "family": "Orr", "affiliation": ["Universidad de Granada"]}],
            "container-title": [v1], "ISSN": [i1], "reference": [{"DOI": "10.5555/fix.2022.2"}, {"DOI": KNOWN_DOI}]}),
        json!({"DOI": "10.5555/fix.2021.1", "title": ["Bayesian inference of species habitat"], "type": "journal-article",
            "issued": {"date-parts": [[2021, 2]]}, "author": [{"given": "Mei", "family": "Tanaka"}],
            "container-title": [v0.clone()], "ISSN": [i0.clone()]}),
        json!({"DOI": "10.5555/fix.2021.2", "title": ["Laser photon statistics"], "type": "book-chapter",
            "issued": {"date-parts": [[2021, 9]]}, "author": [{"given": "Lars", "family": "Nilsson"}]}),
        json!({"DOI": "10.5555/fix.2020.1", "title": ["Database query processing"], "type": "dataset",
            "issued": {"date-parts": [[2020, 1]]}, "author": [{"given": "Mei", "family": "Tanaka"}],
            "container-title": [v0], "ISSN": [i0]}),
        json!({"DOI": "10.5555/fix.2019.1", "title": ["A theorem on regression"], "type": "journal-article",
            "issued": {"date-parts": [[2019, 4]]}, "author": [{"given": "Omar", "family": "Haddad"}]}),
        json!({"DOI": "10.5555/fix.2018.1", "title": ["Randomized placebo trial in patients"], "type": "journal-article",
            "issued": {"date-parts": [[2018, 6]]}, "author": [{"given": "Ines", "family": "Costa"}]}),
        json!({"DOI": "10.5555/fix.2017.1", "title": ["Scholarly bibliometric indicators"], "type": "journal-article",
            "issued": {"date-parts": [[2017, 8]]}, "author": [{"given": "Sven", "family": "Berg"}],
            "reference": [{"DOI": KNOWN_DOI}]}),
    ]
}

pub const PUBMED_SAMPLE: &str = r#"<?xml version="1.0"?>
<!DOCTYPE PubmedArticleSet PUBLIC "-//NLM//DTD PubMedArticle, 1st January 2019//EN" "https://dtd.nlm.nih.gov/ncbi/pubmed/out/pubmed_190101.dtd">
<PubmedArticleSet>
<PubmedArticle><MedlineCitation><PMID>42</PMID><Article>
<Journal><ISSN IssnType="Print">0378-5955</ISSN><JournalIssue><PubDate><Year>2022</Year></PubDate></JournalIssue><Title>Hearing Research</Title></Journal>
<ArticleTitle>Cochlear gene expression in aging cohorts</ArticleTitle>
<Abstract><AbstractText>We measure gene expression in a cohort.</AbstractText></Abstract>
<AuthorList><Author><LastName>Orr</LastName><ForeName>Richard</ForeName>
<AffiliationInfo><Affiliation>University of Granada, Spain</Affiliation></AffiliationInfo></Author></AuthorList>
<ELocationID EIdType="doi">10.5555/pubmed.42</ELocationID>
</Article></MedlineCitation></PubmedArticle>
<PubmedArticle><MedlineCitation><PMID>43</PMID><Article>
<ArticleTitle>Clinical outcomes without a DOI</ArticleTitle>
<AuthorList><Author><LastName>Costa</LastName><ForeName>Ines</ForeName></Author></AuthorList>
</Article></MedlineCitation></PubmedArticle>
<PubmedArticle><MedlineCitation><PMID>44</PMID><Article>
<Journal><ISSN>1234-5678</ISSN><JournalIssue><PubDate><Year>2021</Year></PubDate></JournalIssue><Title>Broken ISSN Journal</Title></Journal>
<ArticleTitle>A record with a bad ISSN</ArticleTitle>
</Article></MedlineCitation></PubmedArticle>
</PubmedArticleSet>
"#;

/// Every bundled fixture file: name and content.
pub fn all_fixture_files() -> Vec<(&'static str, String)> {
    vec![
        ("tree_toy.jsonl", to_jsonl(&tree_toy_lines())),
        ("tree_full_shape.jsonl", to_jsonl(&tree_full_shape_lines())),
        ("issn_linking.csv", issn_linking_csv()),
        ("institutions_toy.jsonl", institutions_toy_jsonl()),
        ("affiliations_labeled.jsonl", affiliations_labeled_jsonl()),
        ("authors_labeled.jsonl", authors_labeled_jsonl()),
        ("dedup_corpus.jsonl", to_jsonl(&dedup_corpus())),
        ("works_10.jsonl", to_jsonl(&works_10())),
        ("pubmed_sample.xml", PUBMED_SAMPLE.to_owned()),
    ]
}

// ---------------------------------------------------------------- stub listing server

#[derive(Default)]
struct StubState {
    records: Vec<Value>,
    requests: AtomicUsize,
    served: AtomicUsize,
    fail_next: AtomicUsize,
    fail_after: AtomicUsize,
    malformed_next: AtomicUsize,
}

#[derive(Deserialize)]
struct PageParams {
    cursor: Option<String>,
    rows: Option<usize>,
}

fn encode_offset(offset: usize) -> String {
    URL_SAFE_NO_PAD.encode(format!("o:{offset}"))
}

fn decode_offset(cursor: &str) -> Option<usize> {
    let bytes = URL_SAFE_NO_PAD.decode(cursor).ok()?;
    String::from_utf8(bytes).ok()?.strip_prefix("o:")?.parse().ok()
}

fn take(counter: &AtomicUsize) -> bool {
    counter.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok()
}

async fn stub_works(AxumState(st): AxumState<Arc<StubState>>, Query(q): Query<PageParams>) -> Response {
    st.requests.fetch_add(1, Ordering::SeqCst);
    if take(&st.fail_next) || st.served.load(Ordering::SeqCst) >= st.fail_after.load(Ordering::SeqCst) {
        return (StatusCode::INTERNAL_SERVER_ERROR, "injected failure").into_response();
    }
    if take(&st.malformed_next) {
        return (StatusCode::OK, "{\"items\": [").into_response();
    }
    let offset = match q.cursor.as_deref() {
        None | Some("*") => 0,
        Some(c) => match decode_offset(c) {
            Some(o) => o,
            None => return (StatusCode::BAD_REQUEST, "bad cursor").into_response(),
        },
    };
    let rows = q.rows.unwrap_or(20).max(1);
    let start = offset.min(st.records.len());
    let end = (start + rows).min(st.records.len());
    st.served.fetch_add(1, Ordering::SeqCst);
    let next = (end < st.records.len()).then(|| encode_offset(end));
    let body = json!({"items": &st.records[start..end], "next_cursor": next});
    (StatusCode::OK, [("content-type", "application/json")], body.to_string()).into_response()
}

/// A Crossref-style cursored listing over fixed records, served on a
/// loopback port from a background thread until dropped.
pub struct StubServer {
    addr: SocketAddr,
    state: Arc<StubState>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(records: Vec<Value>) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let state = Arc::new(StubState { records, fail_after: AtomicUsize::new(usize::MAX), ..Default::default() });
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let app = Router::new().route("/works", get(stub_works)).with_state(state.clone());
        let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(Self { addr, state, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Fail the next `n` requests with HTTP 500.
    pub fn fail_next(&self, n: usize) {
        self.state.fail_next.store(n, Ordering::SeqCst);
    }

    /// Fail every request once `k` pages have been served.
    pub fn fail_after(&self, k: usize) {
        self.state.fail_after.store(k, Ordering::SeqCst);
    }

    /// Stop failing requests.
    pub fn heal(&self) {
        self.state.fail_next.store(0, Ordering::SeqCst);
        self.state.fail_after.store(usize::MAX, Ordering::SeqCst);
    }

    /// Answer the next `n` requests with a truncated JSON body.
    pub fn malformed_next(&self, n: usize) {
        self.state.malformed_next.store(n, Ordering::SeqCst);
    }

    pub fn request_count(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }

    pub fn pages_served(&self) -> usize {
        self.state.served.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::ConceptTree;
    use crate::identifiers::IssnLinkingTable;

    #[test]
    fn generated_identifiers_validate() {
        let mut r = rng(1);
        for _ in 0..200 {
            random_orcid(&mut r);
            random_issn(&mut r);
            random_ror(&mut r);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(synthetic_crossref(50, 9), synthetic_crossref(50, 9));
        assert_ne!(synthetic_crossref(50, 9), synthetic_crossref(50, 10));
        assert_eq!(to_jsonl(&dedup_corpus()), to_jsonl(&dedup_corpus()));
    }

    #[test]
    fn trees_validate() {
        let toy = ConceptTree::from_jsonl(&to_jsonl(&tree_toy_lines())).unwrap();
        assert_eq!(toy.len(), 20);
        assert_eq!(toy.roots().len(), 5);
        let full = ConceptTree::from_jsonl(&to_jsonl(&tree_full_shape_lines())).unwrap();
        assert_eq!(full.roots().len(), 19);
        assert_eq!(full.max_level(), 5);
        assert!(full.len() >= 500);
    }

    #[test]
    fn linking_table_loads() {
        let t = IssnLinkingTable::from_csv_reader(issn_linking_csv().as_bytes()).unwrap();
        assert_eq!(t.len(), 2 * VENUE_POOL_SIZE);
    }

    #[test]
    fn toy_registry_shape() {
        let insts = toy_institutions();
        assert_eq!(insts.len(), INSTITUTION_COUNT);
        let rors: BTreeSet<_> = insts.iter().map(|t| t.record.ror.clone()).collect();
        assert_eq!(rors.len(), INSTITUTION_COUNT);
        assert_eq!(labeled_affiliations().len(), 100);
        assert_eq!(read_institutions_jsonl(&institutions_toy_jsonl()).unwrap().len(), INSTITUTION_COUNT);
    }

    #[test]
    fn cursor_codec_round_trips() {
        for o in [0, 1, 99, 12345] {
            assert_eq!(decode_offset(&encode_offset(o)), Some(o));
        }
        assert_eq!(decode_offset("nope"), None);
    }
}
