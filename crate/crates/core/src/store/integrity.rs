//! Cross-entity consistency checks and derived count maintenance.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::{State, Store, StoreError};
use crate::model::{self, Entity, EntityKind, OpenAlexId, RecordViolation};

fn violation(id: OpenAlexId, rule: String) -> RecordViolation {
    RecordViolation { id, rule }
}

/// Every record-level and cross-entity invariant. Empty means consistent.
pub fn integrity_check(state: &State) -> Vec<RecordViolation> {
    let mut out = Vec::new();
    for kind in EntityKind::ALL {
        let mut holders: BTreeMap<&str, Vec<OpenAlexId>> = BTreeMap::new();
        for e in state.iter(kind) {
            out.extend(model::validate(e));
            for (label, to) in e.edges() {
                if !state.contains(to) {
                    out.push(violation(e.id(), format!("{label} {to} does not exist")));
                }
            }
            if let Some(c) = e.ceid() {
                holders.entry(c).or_default().push(e.id());
            }
            match e {
                Entity::Work(w) => {
                    for d in &w.unresolved_references {
                        if let Some(target) = state.by_ceid(EntityKind::Work, d.as_str()) {
                            out.push(violation(w.id, format!("unresolved reference {d} is stored as {}", target.id())));
                        }
                    }
                }
                Entity::Concept(c) if c.level > 0 => {
                    let levels: Vec<u8> = c
                        .parents
                        .iter()
                        .filter_map(|p| match state.get(*p) {
                            Some(Entity::Concept(pc)) => Some(pc.level),
                            _ => None,
                        })
                        .collect();
                    if levels.iter().any(|&l| l >= c.level) {
                        out.push(violation(c.id, "a parent is not at a lower level".into()));
                    }
                    if !levels.is_empty() && !levels.contains(&(c.level - 1)) {
                        out.push(violation(c.id, format!("no parent at level {}", c.level - 1)));
                    }
                }
                _ => {}
            }
        }
        for (ceid, ids) in &holders {
            for dup in ids.iter().skip(1) {
                out.push(violation(*dup, format!("{kind} external id {ceid} is also held by {}", ids[0])));
            }
            if state.ceid_index(kind).get(*ceid).is_none() {
                out.push(violation(ids[0], format!("external id {ceid} missing from the index")));
            }
        }
        for (ceid, serial) in state.ceid_index(kind) {
            let id = OpenAlexId::new(kind, *serial).expect("stored serials are positive");
            match state.get(id) {
                Some(e) if e.ceid() == Some(ceid.as_str()) => {}
                _ => out.push(violation(id, format!("index entry {ceid} does not match the record"))),
            }
        }
    }
    out
}

/// Number of records whose counts changed, per kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RecomputeReport {
    pub changed: BTreeMap<String, usize>,
}

impl RecomputeReport {
    pub fn total(&self) -> usize {
        self.changed.values().sum()
    }
}

/// Counts derived purely from edges.
#[derive(Debug, Default)]
pub(crate) struct Aggregates {
    pub cited_by: HashMap<OpenAlexId, u64>,
    pub works_count: HashMap<OpenAlexId, u64>,
    pub author_cited_by: HashMap<OpenAlexId, u64>,
}

pub(crate) fn compute(state: &State) -> Aggregates {
    let mut agg = Aggregates::default();
    for e in state.iter(EntityKind::Work) {
        let Entity::Work(w) = e else { continue };
        for r in &w.referenced_works {
            *agg.cited_by.entry(*r).or_default() += 1;
        }
    }
    for e in state.iter(EntityKind::Work) {
        let Entity::Work(w) = e else { continue };
        let mut linked: BTreeSet<OpenAlexId> = BTreeSet::new();
        for a in &w.authorships {
            linked.insert(a.author);
            linked.extend(a.institutions.iter().copied());
        }
        linked.extend(w.locations.iter().filter_map(|l| l.venue));
        linked.extend(w.concepts.iter().map(|c| c.id));
        let cites = agg.cited_by.get(&w.id).copied().unwrap_or(0);
        for id in linked {
            *agg.works_count.entry(id).or_default() += 1;
            if id.kind() == EntityKind::Author {
                *agg.author_cited_by.entry(id).or_default() += cites;
            }
        }
    }
    agg
}

pub(crate) fn recompute_aggregates(store: &Store) -> Result<RecomputeReport, StoreError> {
    let _g = store.gate();
    let mut updates = Vec::new();
    let mut report = RecomputeReport::default();
    for k in EntityKind::ALL {
        report.changed.insert(k.plural().to_owned(), 0);
    }
    {
        let state = store.read();
        let agg = compute(&state);
        for kind in EntityKind::ALL {
            for e in state.iter(kind) {
                let id = e.id();
                let wc = agg.works_count.get(&id).copied().unwrap_or(0);
                let mut next = e.clone();
                match &mut next {
                    Entity::Work(w) => w.cited_by_count = agg.cited_by.get(&id).copied().unwrap_or(0),
                    Entity::Author(a) => {
                        a.works_count = wc;
                        a.cited_by_count = agg.author_cited_by.get(&id).copied().unwrap_or(0);
                    }
                    Entity::Venue(v) => v.works_count = wc,
                    Entity::Institution(i) => i.works_count = wc,
                    Entity::Concept(c) => c.works_count = wc,
                }
                if next != *e {
                    *report.changed.get_mut(kind.plural()).expect("all kinds present") += 1;
                    updates.push(next);
                }
            }
        }
    }
    if !updates.is_empty() {
        store.commit(updates)?;
    }
    Ok(report)
}
