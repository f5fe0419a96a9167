//! Entity resolution: author disambiguation, affiliation → institution
//! matching, and work-version fingerprinting with version-of-record
//! selection.
//!
//! All scorers are pure functions over immutable inputs; the ingest
//! pipeline builds those inputs from a store read view.

pub mod authors;
pub mod institutions;
pub mod names;
pub mod works;

pub use authors::{
    disambiguate_author, score_candidate, AuthorDecision, AuthorSignature, AuthorWeights, MatchRule, MatchScore,
    WorkContext, DEFAULT_AUTHOR_THRESHOLD,
};
pub use institutions::{
    extract_affiliation_candidates, match_institution, match_institution_detailed, normalize_org, CandidateMatch,
    InstitutionRegistry, MatchStage, DEFAULT_INSTITUTION_THRESHOLD,
};
pub use names::{normalize_name, EmptyNameKey, NameKey};
pub use works::{fingerprint_from_raw, fingerprint_work, primary_location_index, select_primary_location, EmptyTitle};
