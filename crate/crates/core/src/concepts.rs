//! Hierarchical concept tree and the lexicon-based work tagger.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identifiers::{validate_wikidata, WikidataId};
use crate::model::{Concept, ConceptAssignment, EntityKind, OpenAlexId, Work, WorkType};
use crate::text;

pub const MAX_LEVEL: u8 = 5;
pub const DEFAULT_CONCEPT_THRESHOLD: f64 = 0.3;
pub const DEFAULT_ANCESTOR_DECAY: f64 = 0.5;
pub const TITLE_TOKEN_WEIGHT: f64 = 2.0;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("reading concept tree: {0}")]
    Io(#[from] std::io::Error),
    #[error("concept tree line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate concept id {0}")]
    DuplicateId(OpenAlexId),
    #[error("concepts {first} and {second} share wikidata id {wikidata}")]
    DuplicateWikidata { wikidata: WikidataId, first: OpenAlexId, second: OpenAlexId },
    #[error("concept {concept} lists unknown parent {parent}")]
    DanglingParent { concept: OpenAlexId, parent: OpenAlexId },
    #[error("parent cycle through concept {concept}")]
    Cycle { concept: OpenAlexId },
    #[error("concept {concept}: {reason}")]
    LevelInconsistency { concept: OpenAlexId, reason: String },
    #[error("concept {concept}: invalid keyword {keyword:?}: {reason}")]
    InvalidKeyword { concept: OpenAlexId, keyword: String, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KeywordSpec {
    Bare(String),
    Weighted { token: String, weight: f64 },
}

impl KeywordSpec {
    fn parts(&self) -> (&str, f64) {
        match self {
            KeywordSpec::Bare(t) => (t, 1.0),
            KeywordSpec::Weighted { token, weight } => (token, *weight),
        }
    }
}

/// One line of a tree file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptLine {
    pub id: OpenAlexId,
    pub wikidata: String,
    pub display_name: String,
    pub level: u8,
    #[serde(default)]
    pub parents: Vec<OpenAlexId>,
    #[serde(default)]
    pub keywords: Vec<KeywordSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConcept {
    pub id: OpenAlexId,
    pub wikidata: WikidataId,
    pub display_name: String,
    pub level: u8,
    pub parents: Vec<OpenAlexId>,
    pub keywords: Vec<(String, f64)>,
}

impl TreeConcept {
    pub fn to_entity(&self, date: NaiveDate) -> Concept {
        Concept {
            id: self.id,
            wikidata: self.wikidata.clone(),
            display_name: self.display_name.clone(),
            level: self.level,
            parents: self.parents.clone(),
            keywords: self.keywords.iter().map(|(t, _)| t.clone()).collect(),
            works_count: 0,
            created_date: date,
            updated_date: date,
        }
    }
}

/// Validated, immutable concept hierarchy with its keyword lexicon.
#[derive(Debug, Clone, Default)]
pub struct ConceptTree {
    concepts: BTreeMap<OpenAlexId, TreeConcept>,
    roots: Vec<OpenAlexId>,
    lexicon: HashMap<String, Vec<(OpenAlexId, f64)>>,
    ancestors: BTreeMap<OpenAlexId, BTreeSet<OpenAlexId>>,
}

impl ConceptTree {
    pub fn load(path: &Path) -> Result<Self, TreeError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TreeError> {
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ConceptLine =
                serde_json::from_str(line).map_err(|e| TreeError::Parse { line: i + 1, message: e.to_string() })?;
            if parsed.id.kind() != EntityKind::Concept {
                return Err(TreeError::Parse { line: i + 1, message: format!("{} is not a concept id", parsed.id) });
            }
            lines.push((i + 1, parsed));
        }
        Self::from_lines(lines)
    }

    fn from_lines(lines: Vec<(usize, ConceptLine)>) -> Result<Self, TreeError> {
        let mut concepts: BTreeMap<OpenAlexId, TreeConcept> = BTreeMap::new();
        let mut by_wikidata: HashMap<WikidataId, OpenAlexId> = HashMap::new();
        for (line_no, l) in lines {
            let wikidata = validate_wikidata(&l.wikidata)
                .map_err(|e| TreeError::Parse { line: line_no, message: e.to_string() })?;
            let mut keywords = Vec::new();
            for k in &l.keywords {
                let (token, weight) = k.parts();
                if token.is_empty() || token.chars().any(|c| !c.is_alphanumeric() || c.is_uppercase()) {
                    return Err(TreeError::InvalidKeyword {
                        concept: l.id,
                        keyword: token.to_owned(),
                        reason: "must be a lowercase alphanumeric token",
                    });
                }
                if !(weight > 0.0 && weight <= 1.0) {
                    return Err(TreeError::InvalidKeyword {
                        concept: l.id,
                        keyword: token.to_owned(),
                        reason: "weight must lie in (0, 1]",
                    });
                }
                keywords.push((token.to_owned(), weight));
            }
            if concepts.contains_key(&l.id) {
                return Err(TreeError::DuplicateId(l.id));
            }
            if let Some(first) = by_wikidata.insert(wikidata.clone(), l.id) {
                return Err(TreeError::DuplicateWikidata { wikidata, first, second: l.id });
            }
            concepts.insert(
                l.id,
                TreeConcept { id: l.id, wikidata, display_name: l.display_name, level: l.level, parents: l.parents, keywords },
            );
        }
        Self::validated(concepts)
    }

    pub fn from_concepts(list: Vec<TreeConcept>) -> Result<Self, TreeError> {
        let mut concepts = BTreeMap::new();
        let mut by_wikidata: HashMap<WikidataId, OpenAlexId> = HashMap::new();
        for c in list {
            if let Some(first) = by_wikidata.insert(c.wikidata.clone(), c.id) {
                return Err(TreeError::DuplicateWikidata { wikidata: c.wikidata, first, second: c.id });
            }
            if concepts.insert(c.id, c.clone()).is_some() {
                return Err(TreeError::DuplicateId(c.id));
            }
        }
        Self::validated(concepts)
    }

    fn validated(concepts: BTreeMap<OpenAlexId, TreeConcept>) -> Result<Self, TreeError> {
        for c in concepts.values() {
            for p in &c.parents {
                if !concepts.contains_key(p) {
                    return Err(TreeError::DanglingParent { concept: c.id, parent: *p });
                }
            }
        }
        detect_cycle(&concepts)?;
        for c in concepts.values() {
            let bad = |reason: String| TreeError::LevelInconsistency { concept: c.id, reason };
            if c.level > MAX_LEVEL {
                return Err(bad(format!("level {} exceeds {MAX_LEVEL}", c.level)));
            }
            if c.level == 0 {
                if !c.parents.is_empty() {
                    return Err(bad("level 0 concept has parents".into()));
                }
                continue;
            }
            if c.parents.is_empty() {
                return Err(bad(format!("level {} concept has no parents", c.level)));
            }
            let levels: Vec<u8> = c.parents.iter().map(|p| concepts[p].level).collect();
            if levels.iter().any(|&l| l >= c.level) {
                return Err(bad(format!("parent level not below {}", c.level)));
            }
            if !levels.contains(&(c.level - 1)) {
                return Err(bad(format!("no parent at level {}", c.level - 1)));
            }
        }
        let roots = concepts.values().filter(|c| c.level == 0).map(|c| c.id).collect();
        let mut lexicon: HashMap<String, Vec<(OpenAlexId, f64)>> = HashMap::new();
        for c in concepts.values() {
            for (token, weight) in &c.keywords {
                lexicon.entry(token.clone()).or_default().push((c.id, *weight));
            }
        }
        let mut ancestors = BTreeMap::new();
        for id in concepts.keys() {
            let mut acc = BTreeSet::new();
            let mut stack: Vec<OpenAlexId> = concepts[id].parents.clone();
            while let Some(p) = stack.pop() {
                if acc.insert(p) {
                    stack.extend(concepts[&p].parents.iter().copied());
                }
            }
            ancestors.insert(*id, acc);
        }
        Ok(Self { concepts, roots, lexicon, ancestors })
    }

    pub fn get(&self, id: OpenAlexId) -> Option<&TreeConcept> {
        self.concepts.get(&id)
    }

    pub fn contains(&self, id: OpenAlexId) -> bool {
        self.concepts.contains_key(&id)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &TreeConcept> {
        self.concepts.values()
    }

    pub fn roots(&self) -> &[OpenAlexId] {
        &self.roots
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn max_level(&self) -> u8 {
        self.concepts.values().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn ancestors(&self, id: OpenAlexId) -> impl Iterator<Item = OpenAlexId> + '_ {
        self.ancestors.get(&id).into_iter().flatten().copied()
    }

    pub fn lexicon_entries(&self, token: &str) -> &[(OpenAlexId, f64)] {
        self.lexicon.get(token).map_or(&[], Vec::as_slice)
    }
}

fn detect_cycle(concepts: &BTreeMap<OpenAlexId, TreeConcept>) -> Result<(), TreeError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: HashMap<OpenAlexId, Mark> = HashMap::new();
    for &start in concepts.keys() {
        if marks.contains_key(&start) {
            continue;
        }
        // Iterative DFS over parent edges: (node, next parent index).
        let mut stack = vec![(start, 0usize)];
        marks.insert(start, Mark::Active);
        while let Some((node, idx)) = stack.pop() {
            let parents = &concepts[&node].parents;
            if idx < parents.len() {
                stack.push((node, idx + 1));
                let p = parents[idx];
                match marks.get(&p) {
                    Some(Mark::Active) => return Err(TreeError::Cycle { concept: p }),
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(p, Mark::Active);
                        stack.push((p, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
    }
    Ok(())
}

/// Tagger tunables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub threshold: f64,
    pub ancestor_decay: f64,
    pub title_weight: f64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_CONCEPT_THRESHOLD, ancestor_decay: DEFAULT_ANCESTOR_DECAY, title_weight: TITLE_TOKEN_WEIGHT }
    }
}

/// Score concepts for a work from its title and abstract.
///
/// Raw score of a concept is the sum of matched keyword weights times
/// occurrences (title occurrences count `title_weight` times), divided by
/// the best raw score for the work. Concepts at or above the threshold are
/// emitted directly; each of their ancestors is emitted with `decay` times
/// the best score among its directly emitted descendants, unless it was
/// emitted directly with a score at least as high.
pub fn tag_work(title: Option<&str>, abstract_text: Option<&str>, tree: &ConceptTree, cfg: &TaggerConfig) -> Vec<ConceptAssignment> {
    let mut counts: HashMap<String, f64> = HashMap::new();
    for tok in title.into_iter().flat_map(text::tokens) {
        *counts.entry(tok).or_default() += cfg.title_weight;
    }
    for tok in abstract_text.into_iter().flat_map(text::tokens) {
        *counts.entry(tok).or_default() += 1.0;
    }
    let mut raw: BTreeMap<OpenAlexId, f64> = BTreeMap::new();
    for (tok, n) in &counts {
        for (cid, w) in tree.lexicon_entries(tok) {
            *raw.entry(*cid).or_default() += w * n;
        }
    }
    let max = raw.values().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let direct: BTreeMap<OpenAlexId, f64> =
        raw.into_iter().map(|(c, r)| (c, r / max)).filter(|(_, s)| *s >= cfg.threshold).collect();

    let mut inherited: BTreeMap<OpenAlexId, f64> = BTreeMap::new();
    for (&c, &s) in &direct {
        for a in tree.ancestors(c) {
            let e = inherited.entry(a).or_default();
            *e = e.max(cfg.ancestor_decay * s);
        }
    }
    let mut out: BTreeMap<OpenAlexId, ConceptAssignment> =
        direct.iter().map(|(&id, &score)| (id, ConceptAssignment { id, score, inherited: false })).collect();
    for (id, score) in inherited {
        match out.get(&id) {
            Some(existing) if existing.score >= score => {}
            _ => {
                out.insert(id, ConceptAssignment { id, score, inherited: true });
            }
        }
    }
    let mut list: Vec<ConceptAssignment> = out.into_values().collect();
    list.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.serial().cmp(&b.id.serial())));
    list
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverageBucket {
    pub works: u64,
    pub tagged: u64,
    pub fraction: f64,
}

/// Share of works carrying at least one concept.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverageReport {
    pub works: u64,
    pub tagged: u64,
    pub fraction: f64,
    pub empty_store: bool,
    pub per_work_type: BTreeMap<String, CoverageBucket>,
}

fn frac(tagged: u64, works: u64) -> f64 {
    if works == 0 {
        0.0
    } else {
        tagged as f64 / works as f64
    }
}

pub fn coverage_report<'a>(works: impl IntoIterator<Item = &'a Work>) -> CoverageReport {
    let mut report = CoverageReport::default();
    let mut per: BTreeMap<WorkType, CoverageBucket> = BTreeMap::new();
    for w in works {
        let tagged = !w.concepts.is_empty();
        report.works += 1;
        let b = per.entry(w.work_type).or_default();
        b.works += 1;
        if tagged {
            report.tagged += 1;
            b.tagged += 1;
        }
    }
    report.fraction = frac(report.tagged, report.works);
    report.empty_store = report.works == 0;
    report.per_work_type = per
        .into_iter()
        .map(|(t, mut b)| {
            b.fraction = frac(b.tagged, b.works);
            (t.as_str().to_owned(), b)
        })
        .collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: u64) -> OpenAlexId {
        OpenAlexId::new(EntityKind::Concept, n).unwrap()
    }

    const TOY: &str = r#"{"id":"C1","wikidata":"Q21198","display_name":"computer science","level":0,"parents":[],"keywords":[]}
{"id":"C2","wikidata":"Q131476","display_name":"graph theory","level":1,"parents":["C1"],"keywords":["graph"]}
"#;

    #[test]
    fn toy_tree_tagging_example() {
        let tree = ConceptTree::from_jsonl(TOY).unwrap();
        let got = tag_work(Some("A heterogeneous directed graph of scholarship"), None, &tree, &TaggerConfig::default());
        assert_eq!(
            got,
            vec![
                ConceptAssignment { id: c(2), score: 1.0, inherited: false },
                ConceptAssignment { id: c(1), score: 0.5, inherited: true },
            ]
        );
    }

    #[test]
    fn empty_and_unmatched_text() {
        let tree = ConceptTree::from_jsonl(TOY).unwrap();
        assert!(tag_work(None, None, &tree, &TaggerConfig::default()).is_empty());
        assert!(tag_work(Some(""), Some(""), &tree, &TaggerConfig::default()).is_empty());
        assert!(tag_work(Some("nothing relevant here"), None, &tree, &TaggerConfig::default()).is_empty());
    }

    #[test]
    fn level_skip_is_rejected() {
        let text = r#"{"id":"C1","wikidata":"Q1","display_name":"r","level":0}
{"id":"C2","wikidata":"Q2","display_name":"x","level":2,"parents":["C1"]}"#;
        assert!(matches!(ConceptTree::from_jsonl(text), Err(TreeError::LevelInconsistency { .. })));
    }

    #[test]
    fn duplicate_wikidata_is_rejected() {
        let text = r#"{"id":"C1","wikidata":"Q42","display_name":"a","level":0}
{"id":"C2","wikidata":"Q42","display_name":"b","level":0}"#;
        assert!(matches!(ConceptTree::from_jsonl(text), Err(TreeError::DuplicateWikidata { .. })));
    }

    #[test]
    fn cycle_and_dangling_are_distinct_errors() {
        let cyc = r#"{"id":"C1","wikidata":"Q1","display_name":"a","level":1,"parents":["C2"]}
{"id":"C2","wikidata":"Q2","display_name":"b","level":1,"parents":["C1"]}"#;
        assert!(matches!(ConceptTree::from_jsonl(cyc), Err(TreeError::Cycle { .. })));
        let dangling = r#"{"id":"C1","wikidata":"Q1","display_name":"a","level":1,"parents":["C9"]}"#;
        assert!(matches!(ConceptTree::from_jsonl(dangling), Err(TreeError::DanglingParent { .. })));
    }

    #[test]
    fn weighted_keywords_and_title_doubling() {
        let text = r#"{"id":"C1","wikidata":"Q1","display_name":"root","level":0}
{"id":"C2","wikidata":"Q2","display_name":"a","level":1,"parents":["C1"],"keywords":["alpha"]}
{"id":"C3","wikidata":"Q3","display_name":"b","level":1,"parents":["C1"],"keywords":[{"token":"beta","weight":0.5}]}"#;
        let tree = ConceptTree::from_jsonl(text).unwrap();
        // alpha: 1 abstract hit = 1.0; beta: 1 title hit = 0.5 * 2 = 1.0 -> tie.
        let got = tag_work(Some("beta"), Some("alpha"), &tree, &TaggerConfig::default());
        assert_eq!(got[0], ConceptAssignment { id: c(2), score: 1.0, inherited: false });
        assert_eq!(got[1], ConceptAssignment { id: c(3), score: 1.0, inherited: false });
        assert_eq!(got[2], ConceptAssignment { id: c(1), score: 0.5, inherited: true });
    }

    #[test]
    fn coverage_of_empty_and_small_sets() {
        let r = coverage_report(std::iter::empty());
        assert!(r.empty_store);
        assert_eq!(r.fraction, 0.0);
    }
}
