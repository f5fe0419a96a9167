mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::*;
use openindex_core::concepts::{tag_work, TaggerConfig};
use openindex_core::identifiers::{normalize_doi, ror_checksum, validate_issn, validate_orcid, validate_ror, Issn, IssnLinkingTable};
use openindex_core::model::{Author, Entity, EntityKind, OpenAlexId};
use openindex_core::store::Store;

fn kind() -> impl Strategy<Value = EntityKind> {
    prop::sample::select(EntityKind::ALL.to_vec())
}

fn issn_from(d: &[u8]) -> Issn {
    let s: u32 = d.iter().enumerate().map(|(i, &x)| u32::from(x) * (8 - i as u32)).sum();
    let c = (0..=10u32).find(|c| (s + c) % 11 == 0).unwrap();
    let check = if c == 10 { 'X' } else { char::from(b'0' + c as u8) };
    let digits: String = d.iter().map(|x| char::from(b'0' + x)).collect();
    validate_issn(&format!("{}-{}{check}", &digits[..4], &digits[4..])).unwrap()
}

proptest! {
    #[test]
    fn openalex_id_round_trips(k in kind(), serial in 1u64..u64::MAX / 2) {
        let id = OpenAlexId::new(k, serial).unwrap();
        prop_assert_eq!(OpenAlexId::parse(&id.short()).unwrap(), id);
        prop_assert_eq!(OpenAlexId::parse(&id.url()).unwrap(), id);
        prop_assert_eq!(OpenAlexId::parse(&id.short().to_lowercase()).unwrap(), id);
        let json = serde_json::to_string(&id).unwrap();
        prop_assert_eq!(serde_json::from_str::<OpenAlexId>(&json).unwrap(), id);
    }

    #[test]
    fn doi_normalization_is_idempotent(raw in "\\PC{0,40}") {
        if let Ok(once) = normalize_doi(&raw) {
            prop_assert_eq!(normalize_doi(once.as_str()).unwrap(), once);
        }
    }

    #[test]
    fn doi_prefix_and_case_do_not_matter(reg in "[0-9]{4,9}", suffix in "[A-Za-z0-9._;()/-]{1,30}", pre in prop::sample::select(vec!["", "doi:", "https://doi.org/", "HTTP://DX.DOI.ORG/"])) {
        let base = format!("10.{reg}/{suffix}");
        let a = normalize_doi(&base).unwrap();
        let b = normalize_doi(&format!("{pre}{}", base.to_uppercase())).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn orcid_check_digit_matches_brute_force(d in prop::collection::vec(0u8..10, 15)) {
        let total: u64 = d.iter().enumerate().map(|(i, &x)| u64::from(x) << (15 - i)).sum();
        let body: String = d.iter().map(|x| char::from(b'0' + x)).collect();
        for c in "0123456789X".chars() {
            let v = if c == 'X' { 10 } else { u64::from(c.to_digit(10).unwrap()) };
            let s = format!("{body}{c}");
            let dashed = format!("{}-{}-{}-{}", &s[..4], &s[4..8], &s[8..12], &s[12..]);
            prop_assert_eq!(validate_orcid(&dashed).is_ok(), (total + v) % 11 == 1, "{}", dashed);
        }
    }

    #[test]
    fn issn_check_digit_matches_brute_force(d in prop::collection::vec(0u8..10, 7)) {
        let total: u32 = d.iter().enumerate().map(|(i, &x)| u32::from(x) * (8 - i as u32)).sum();
        let body: String = d.iter().map(|x| char::from(b'0' + x)).collect();
        for c in "0123456789X".chars() {
            let v = if c == 'X' { 10 } else { c.to_digit(10).unwrap() };
            let s = format!("{}-{}{c}", &body[..4], &body[4..]);
            prop_assert_eq!(validate_issn(&s).is_ok(), (total + v) % 11 == 0, "{}", s);
        }
    }

    #[test]
    fn ror_checksum_accepts_exactly_one_suffix(body in "0[0-9a-hjkmnp-tv-z]{6}") {
        let check = ror_checksum(&body).unwrap();
        for c in 0..100u8 {
            prop_assert_eq!(validate_ror(&format!("{body}{c:02}")).is_ok(), c == check);
        }
    }

    #[test]
    fn issn_l_is_idempotent_for_any_star_table(groups in prop::collection::vec(prop::collection::vec(prop::collection::vec(0u8..10, 7), 1..4), 1..10), probe in prop::collection::vec(0u8..10, 7)) {
        let mut pairs = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for g in &groups {
            let members: Vec<Issn> = g.iter().map(|d| issn_from(d)).filter(|i| seen.insert(i.clone())).collect();
            if let Some(link) = members.first() {
                pairs.extend(members.iter().map(|m| (m.clone(), link.clone())));
            }
        }
        let table = IssnLinkingTable::from_pairs(pairs).unwrap();
        for (issn, _) in table.iter() {
            let l = table.issn_l_of(issn);
            prop_assert_eq!(table.issn_l_of(&l), l);
        }
        let p = issn_from(&probe);
        let l = table.issn_l_of(&p);
        prop_assert_eq!(table.issn_l_of(&l), l);
    }

    #[test]
    fn tagger_is_deterministic_and_bounded(title in "[a-z ]{0,60}", words in prop::collection::vec(0usize..2000, 0..6)) {
        let tree = full_tree();
        let kw = openindex_core::fixtures::full_shape_keywords();
        let abs: Vec<&str> = words.iter().map(|i| kw[i % kw.len()].as_str()).collect();
        let abs = abs.join(" ");
        let cfg = TaggerConfig::default();
        let a = tag_work(Some(&title), Some(&abs), &tree, &cfg);
        prop_assert_eq!(&a, &tag_work(Some(&title), Some(&abs), &tree, &cfg));
        if !a.is_empty() {
            prop_assert!(a.iter().any(|c| c.score == 1.0));
        }
        for c in &a {
            prop_assert!(c.score > 0.0 && c.score <= 1.0);
            for anc in tree.ancestors(c.id) {
                prop_assert!(a.iter().any(|d| d.id == anc));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random author inserts and ORCID reassignments keep the external-id
    /// index a bijection, before and after reopening.
    #[test]
    fn ceid_index_stays_bijective(ops in prop::collection::vec((0usize..8, prop::option::of(0usize..6)), 1..30)) {
        let dir = tempfile::tempdir().unwrap();
        let mut r = openindex_core::fixtures::rng(7);
        let orcids: Vec<String> = (0..6).map(|_| openindex_core::fixtures::random_orcid(&mut r).to_string()).collect();
        let mut slots: BTreeMap<usize, OpenAlexId> = BTreeMap::new();
        {
            let store = open(dir.path());
            for (slot, orcid) in ops {
                let orcid = orcid.map(|i| orcids[i].clone());
                // An ORCID is moved only after its current holder releases it.
                if let Some(o) = &orcid {
                    if let Some(Entity::Author(mut holder)) = store.get_by_ceid(EntityKind::Author, o).unwrap() {
                        holder.orcid = None;
                        store.upsert(Entity::Author(holder)).unwrap();
                    }
                }
                let id = match slots.get(&slot) {
                    Some(id) => *id,
                    None => *slots.entry(slot).or_insert(store.mint(EntityKind::Author).unwrap()),
                };
                let a = Author {
                    id,
                    orcid: orcid.map(|o| validate_orcid(&o).unwrap()),
                    display_name: format!("Person {slot}"),
                    alternate_names: vec![],
                    works_count: 0,
                    cited_by_count: 0,
                    created_date: day(),
                    updated_date: day(),
                };
                store.upsert(Entity::Author(a)).unwrap();
                check_bijection(&store)?;
            }
        }
        let store = open(dir.path());
        check_bijection(&store)?;
        prop_assert!(store.integrity_check().is_empty());
    }
}

fn check_bijection(store: &Store) -> Result<(), TestCaseError> {
    let st = store.read();
    let mut seen = BTreeMap::new();
    for e in st.iter(EntityKind::Author) {
        if let Some(c) = e.ceid() {
            prop_assert!(seen.insert(c.to_owned(), e.id()).is_none(), "ceid {} held twice", c);
            prop_assert_eq!(st.by_ceid(EntityKind::Author, c).map(Entity::id), Some(e.id()));
        }
    }
    Ok(())
}
