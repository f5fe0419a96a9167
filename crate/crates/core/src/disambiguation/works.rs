//! Work-version fingerprints and primary (version-of-record) selection.

use thiserror::Error;

use super::names::family_of;
use crate::model::{HostLocation, OpenAlexId, VenueType};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot fingerprint a work without a title")]
pub struct EmptyTitle;

/// Folded, punctuation-free title, suffixed with `|family` of the first
/// author when known.
pub fn fingerprint_work(title: &str, first_author_family: Option<&str>) -> Result<String, EmptyTitle> {
    let base = text::fold_alnum(title);
    if base.is_empty() {
        return Err(EmptyTitle);
    }
    Ok(match first_author_family.map(text::fold_alnum).filter(|f| !f.is_empty()) {
        Some(family) => format!("{base}|{family}"),
        None => base,
    })
}

/// Fingerprint from a title and the first author's raw name.
pub fn fingerprint_from_raw(title: Option<&str>, first_author_raw: Option<&str>) -> Option<String> {
    let family = first_author_raw.and_then(family_of);
    fingerprint_work(title?, family.as_deref()).ok()
}

fn venue_rank(t: Option<VenueType>) -> u8 {
    match t {
        Some(VenueType::Journal) => 3,
        Some(VenueType::Conference) => 2,
        Some(VenueType::Repository) => 1,
        None => 0,
    }
}

/// Index of the primary location: best version, then venue type, then
/// earliest position. `venue_type` resolves a venue id to its type.
pub fn primary_location_index(
    locations: &[HostLocation],
    venue_type: impl Fn(OpenAlexId) -> Option<VenueType>,
) -> Option<usize> {
    locations
        .iter()
        .enumerate()
        .map(|(i, l)| (l.version.rank(), venue_rank(l.venue.and_then(&venue_type)), std::cmp::Reverse(i)))
        .max()
        .map(|(_, _, std::cmp::Reverse(i))| i)
}

/// Choose the primary location and set the flags: chosen on, others off.
pub fn select_primary_location(
    locations: &mut [HostLocation],
    venue_type: impl Fn(OpenAlexId) -> Option<VenueType>,
) -> Option<usize> {
    let idx = primary_location_index(locations, venue_type)?;
    for (i, l) in locations.iter_mut().enumerate() {
        l.primary = i == idx;
    }
    Some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityKind, Version};

    #[test]
    fn fingerprint_examples() {
        assert_eq!(fingerprint_work("Deep Learning—A Survey!", None).unwrap(), "deep learning a survey");
        assert_eq!(fingerprint_work("deep learning: a survey", None).unwrap(), "deep learning a survey");
        assert_eq!(
            fingerprint_work(
                "OpenAlex: A fully-open index of scholarly works, authors, venues, institutions, and concepts",
                None
            )
            .unwrap(),
            "openalex a fully open index of scholarly works authors venues institutions and concepts"
        );
        assert_ne!(fingerprint_work("Same", Some("Priem")).unwrap(), fingerprint_work("Same", Some("Piwowar")).unwrap());
        assert_eq!(fingerprint_work("  ?? ", None), Err(EmptyTitle));
    }

    #[test]
    fn fingerprint_is_idempotent_on_titles() {
        let once = fingerprint_work("Ökonomie & Ärger: Über Ñandú", None).unwrap();
        assert_eq!(fingerprint_work(&once, None).unwrap(), once);
    }

    fn loc(venue: Option<u64>, version: Version) -> HostLocation {
        HostLocation {
            venue: venue.map(|v| OpenAlexId::new(EntityKind::Venue, v).unwrap()),
            url: Some("https://example.org".into()),
            version,
            license: None,
            primary: false,
        }
    }

    fn types(id: OpenAlexId) -> Option<VenueType> {
        match id.serial() {
            1 => Some(VenueType::Repository),
            2 => Some(VenueType::Journal),
            3 => Some(VenueType::Conference),
            _ => None,
        }
    }

    #[test]
    fn vor_beats_preprint() {
        let mut locs = vec![loc(Some(1), Version::Submitted), loc(Some(2), Version::Published)];
        assert_eq!(select_primary_location(&mut locs, types), Some(1));
        assert!(locs[1].primary && !locs[0].primary);
    }

    #[test]
    fn venue_type_breaks_version_ties() {
        let mut locs = vec![loc(Some(1), Version::Unknown), loc(Some(2), Version::Unknown)];
        assert_eq!(select_primary_location(&mut locs, types), Some(1));
    }

    #[test]
    fn earliest_position_breaks_remaining_ties() {
        let mut locs = vec![loc(None, Version::Accepted), loc(None, Version::Accepted)];
        locs[1].primary = true;
        assert_eq!(select_primary_location(&mut locs, types), Some(0));
        assert!(locs[0].primary && !locs[1].primary);
        let mut single = vec![loc(Some(3), Version::Unknown)];
        assert_eq!(select_primary_location(&mut single, types), Some(0));
        assert_eq!(select_primary_location(&mut [], types), None);
    }
}
