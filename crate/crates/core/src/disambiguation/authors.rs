use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::names::{normalize_name, NameKey};
use crate::identifiers::Orcid;
use crate::ingest::StubAuthor;
use crate::model::OpenAlexId;

/// Tolerance for comparing summed float contributions against thresholds.
const SCORE_EPS: f64 = 1e-9;

/// Everything the scorer knows about a stored author, recomputed from the
/// store on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorSignature {
    pub author: OpenAlexId,
    pub orcid: Option<Orcid>,
    pub name_key: NameKey,
    pub coauthor_name_keys: BTreeSet<NameKey>,
    pub venue_ids: BTreeSet<OpenAlexId>,
    pub work_ids: BTreeSet<OpenAlexId>,
    pub cited_work_ids: BTreeSet<OpenAlexId>,
}

/// Feature weights for author scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuthorWeights {
    pub name_exact: f64,
    pub coauthor_each: f64,
    pub coauthor_cap: f64,
    pub venue: f64,
    pub citation_each: f64,
    pub citation_cap: f64,
}

impl Default for AuthorWeights {
    fn default() -> Self {
        Self { name_exact: 0.4, coauthor_each: 0.1, coauthor_cap: 0.3, venue: 0.2, citation_each: 0.05, citation_cap: 0.1 }
    }
}

pub const DEFAULT_AUTHOR_THRESHOLD: f64 = 0.5;

/// A clamped sum of named feature contributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchScore {
    pub value: f64,
    pub features: BTreeMap<String, f64>,
}

impl MatchScore {
    pub fn from_features(features: BTreeMap<String, f64>) -> Self {
        let sum: f64 = features.values().sum();
        Self { value: sum.clamp(0.0, 1.0), features }
    }

    pub fn meets(&self, threshold: f64) -> bool {
        self.value + SCORE_EPS >= threshold
    }
}

/// What the stub's work contributes to scoring.
#[derive(Debug, Clone, Default)]
pub struct WorkContext {
    pub venue: Option<OpenAlexId>,
    pub referenced_works: BTreeSet<OpenAlexId>,
    /// Name keys of the other authors listed on the same record.
    pub coauthor_name_keys: BTreeSet<NameKey>,
    /// The stored work this record will land on, when already known.
    pub work: Option<OpenAlexId>,
    /// Authors already claimed by earlier mentions on the same record.
    pub excluded: BTreeSet<OpenAlexId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchRule {
    Orcid,
    SameWork,
    Score,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AuthorDecision {
    Match { author: OpenAlexId, rule: MatchRule, score: Option<MatchScore> },
    CreateNew { best: Option<(OpenAlexId, MatchScore)> },
}

impl AuthorDecision {
    pub fn matched(&self) -> Option<OpenAlexId> {
        match self {
            AuthorDecision::Match { author, .. } => Some(*author),
            AuthorDecision::CreateNew { .. } => None,
        }
    }
}

pub fn score_candidate(
    stub_key: &NameKey,
    ctx: &WorkContext,
    cand: &AuthorSignature,
    weights: &AuthorWeights,
) -> MatchScore {
    let mut features = BTreeMap::new();
    features.insert("name_exact".to_owned(), if *stub_key == cand.name_key { weights.name_exact } else { 0.0 });
    let shared = ctx.coauthor_name_keys.intersection(&cand.coauthor_name_keys).count() as f64;
    features.insert("coauthors".to_owned(), (weights.coauthor_each * shared).min(weights.coauthor_cap));
    let same_venue = ctx.venue.is_some_and(|v| cand.venue_ids.contains(&v));
    features.insert("venue".to_owned(), if same_venue { weights.venue } else { 0.0 });
    // Symmetric overlap: the record cites the candidate's works, or the
    // candidate's works cite the record's work.
    let mut overlap = ctx.referenced_works.intersection(&cand.work_ids).count();
    if let Some(w) = ctx.work {
        if cand.cited_work_ids.contains(&w) {
            overlap += 1;
        }
    }
    features.insert("citations".to_owned(), (weights.citation_each * overlap as f64).min(weights.citation_cap));
    MatchScore::from_features(features)
}

/// Decide whether a stub author is one of the (already blocked) candidates.
///
/// ORCID equality wins outright and an ORCID conflict excludes a candidate.
/// An author who already holds an authorship with the same name on the
/// target work is the same person. Otherwise the best-scoring candidate
/// matches if it reaches `threshold`; ties go to the lowest serial.
pub fn disambiguate_author(
    stub: &StubAuthor,
    ctx: &WorkContext,
    candidates: &[AuthorSignature],
    weights: &AuthorWeights,
    threshold: f64,
) -> AuthorDecision {
    let mut sorted: Vec<&AuthorSignature> = candidates.iter().filter(|c| !ctx.excluded.contains(&c.author)).collect();
    sorted.sort_by_key(|c| c.author.serial());

    if let Some(orcid) = &stub.orcid {
        if let Some(c) = sorted.iter().find(|c| c.orcid.as_ref() == Some(orcid)) {
            return AuthorDecision::Match { author: c.author, rule: MatchRule::Orcid, score: None };
        }
        sorted.retain(|c| c.orcid.is_none());
    }

    let Ok(stub_key) = normalize_name(&stub.raw_name) else {
        return AuthorDecision::CreateNew { best: None };
    };
    sorted.retain(|c| c.name_key.compatible(&stub_key));

    if let Some(work) = ctx.work {
        if let Some(c) = sorted.iter().find(|c| c.work_ids.contains(&work) && c.name_key == stub_key) {
            return AuthorDecision::Match { author: c.author, rule: MatchRule::SameWork, score: None };
        }
    }

    let mut best: Option<(OpenAlexId, MatchScore)> = None;
    for c in sorted {
        let s = score_candidate(&stub_key, ctx, c, weights);
        if best.as_ref().is_none_or(|(_, b)| s.value > b.value + SCORE_EPS) {
            best = Some((c.author, s));
        }
    }
    match best {
        Some((author, score)) if score.meets(threshold) => {
            AuthorDecision::Match { author, rule: MatchRule::Score, score: Some(score) }
        }
        best => AuthorDecision::CreateNew { best },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identifiers::validate_orcid;
    use crate::model::EntityKind;

    fn aid(n: u64) -> OpenAlexId {
        OpenAlexId::new(EntityKind::Author, n).unwrap()
    }
    fn vid(n: u64) -> OpenAlexId {
        OpenAlexId::new(EntityKind::Venue, n).unwrap()
    }
    fn key(s: &str) -> NameKey {
        normalize_name(s).unwrap()
    }
    fn sig(n: u64, name: &str) -> AuthorSignature {
        AuthorSignature {
            author: aid(n),
            orcid: None,
            name_key: key(name),
            coauthor_name_keys: BTreeSet::new(),
            venue_ids: BTreeSet::new(),
            work_ids: BTreeSet::new(),
            cited_work_ids: BTreeSet::new(),
        }
    }
    fn stub(name: &str, orcid: Option<&str>) -> StubAuthor {
        StubAuthor { raw_name: name.into(), orcid: orcid.map(|o| validate_orcid(o).unwrap()), raw_affiliations: vec![] }
    }

    #[test]
    fn orcid_match_dominates_names() {
        let mut c = sig(3, "Heather Piwowar");
        c.orcid = Some(validate_orcid("0000-0002-1825-0097").unwrap());
        let d = disambiguate_author(
            &stub("H. A. Piwowar-Smith", Some("0000-0002-1825-0097")),
            &WorkContext::default(),
            &[sig(1, "H. Piwowar-Smith"), c],
            &AuthorWeights::default(),
            0.5,
        );
        assert_eq!(d.matched(), Some(aid(3)));
    }

    #[test]
    fn orcid_conflict_excludes_candidate() {
        let mut c = sig(1, "Jason Priem");
        c.orcid = Some(validate_orcid("0000-0002-1825-0097").unwrap());
        c.coauthor_name_keys = [key("H Piwowar"), key("R Orr")].into();
        let ctx = WorkContext { coauthor_name_keys: [key("H Piwowar"), key("R Orr")].into(), ..Default::default() };
        let d = disambiguate_author(
            &stub("Jason Priem", Some("0000-0001-5109-3700")),
            &ctx,
            &[c],
            &AuthorWeights::default(),
            0.5,
        );
        assert_eq!(d, AuthorDecision::CreateNew { best: None });
    }

    #[test]
    fn name_coauthors_and_venue_reach_threshold() {
        // 0.4 (name) + min(0.1 * 2, 0.3) + 0.2 (venue) = 0.8
        let mut c = sig(1, "Jason Priem");
        c.coauthor_name_keys = [key("H Piwowar"), key("R Orr"), key("X Other")].into();
        c.venue_ids = [vid(9)].into();
        let ctx = WorkContext {
            venue: Some(vid(9)),
            coauthor_name_keys: [key("Heather Piwowar"), key("Richard Orr")].into(),
            ..Default::default()
        };
        let d = disambiguate_author(&stub("J. Priem", None), &ctx, &[c], &AuthorWeights::default(), 0.5);
        match d {
            AuthorDecision::Match { author, rule: MatchRule::Score, score: Some(s) } => {
                assert_eq!(author, aid(1));
                assert!((s.value - 0.8).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn name_only_homonym_creates_new() {
        let d = disambiguate_author(
            &stub("J. Smith", None),
            &WorkContext::default(),
            &[sig(1, "John Smith")],
            &AuthorWeights::default(),
            0.5,
        );
        match d {
            AuthorDecision::CreateNew { best: Some((_, s)) } => assert!((s.value - 0.4).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ties_go_to_lowest_serial() {
        let ctx = WorkContext { venue: Some(vid(1)), ..Default::default() };
        let mut a = sig(7, "J Smith");
        a.venue_ids = [vid(1)].into();
        let mut b = sig(4, "J Smith");
        b.venue_ids = [vid(1)].into();
        let d = disambiguate_author(&stub("J Smith", None), &ctx, &[a, b], &AuthorWeights::default(), 0.5);
        assert_eq!(d.matched(), Some(aid(4)));
    }

    #[test]
    fn citation_overlap_is_capped() {
        let w = |n| OpenAlexId::new(EntityKind::Work, n).unwrap();
        let mut c = sig(1, "J Smith");
        c.work_ids = [w(1), w(2), w(3)].into();
        let ctx = WorkContext { referenced_works: [w(1), w(2), w(3)].into(), ..Default::default() };
        let s = score_candidate(&key("J Smith"), &ctx, &c, &AuthorWeights::default());
        assert!((s.features["citations"] - 0.1).abs() < 1e-12);
        assert!((s.value - 0.5).abs() < 1e-12);
    }
}
