//! Per-record resolution: venue, authors, institutions, work upsert or
//! merge, primary-location flagging, concept tagging and reference
//! resolution, written as one atomic store commit.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use super::{Parsed, RejectReason, StubAuthor, WorkStub};
use crate::concepts::{tag_work, ConceptTree, TaggerConfig};
use crate::disambiguation::{
    disambiguate_author, extract_affiliation_candidates, fingerprint_from_raw, match_institution_detailed,
    normalize_name, select_primary_location, AuthorDecision, AuthorSignature, AuthorWeights, InstitutionRegistry,
    NameKey, WorkContext, DEFAULT_AUTHOR_THRESHOLD, DEFAULT_INSTITUTION_THRESHOLD,
};
use crate::identifiers::{Doi, IssnLinkingTable};
use crate::model::{
    Author, Authorship, Entity, EntityKind, HostLocation, Institution, OpenAlexId, Position, SourceRef, Venue,
    VenueType, Work,
};
use crate::store::{State, Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub author_weights: AuthorWeights,
    pub author_threshold: f64,
    pub institution_threshold: f64,
    pub tagger: TaggerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            author_weights: AuthorWeights::default(),
            author_threshold: DEFAULT_AUTHOR_THRESHOLD,
            institution_threshold: DEFAULT_INSTITUTION_THRESHOLD,
            tagger: TaggerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestOutcome {
    Created,
    Updated,
    Merged,
}

/// One line of the ingest report log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub source_record_id: String,
    pub outcome: IngestOutcome,
    pub work_id: OpenAlexId,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("rejected: {0}")]
    Rejected(#[from] RejectReason),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Drives records into a store. Holds the matching views (ISSN-L table,
/// concept tree, institution registry) that stay fixed for a run.
pub struct Pipeline<'s> {
    store: &'s Store,
    cfg: PipelineConfig,
    issn: IssnLinkingTable,
    tree: Option<ConceptTree>,
    registry: InstitutionRegistry,
    resolve_log: Option<Box<dyn Write + Send + 's>>,
}

/// Records created or changed while resolving one stub.
struct Pending<'a> {
    state: &'a State,
    changed: BTreeMap<OpenAlexId, Entity>,
}

impl<'a> Pending<'a> {
    fn get(&self, id: OpenAlexId) -> Option<&Entity> {
        self.changed.get(&id).or_else(|| self.state.get(id))
    }

    fn put(&mut self, e: Entity) {
        self.changed.insert(e.id(), e);
    }

    fn venue_type(&self, id: OpenAlexId) -> Option<VenueType> {
        match self.get(id) {
            Some(Entity::Venue(v)) => Some(v.venue_type),
            _ => None,
        }
    }
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, item: T) {
    if !v.contains(&item) {
        v.push(item);
    }
}

/// Longest name wins, then lexicographically smallest; the rest sorted.
fn choose_names(names: BTreeSet<String>) -> (String, Vec<String>) {
    let display = names
        .iter()
        .max_by(|a, b| a.chars().count().cmp(&b.chars().count()).then_with(|| b.cmp(a)))
        .cloned()
        .unwrap_or_default();
    let alternates = names.into_iter().filter(|n| *n != display).collect();
    (display, alternates)
}

fn set_field<T>(cur: &mut Option<T>, incoming: Option<T>, wins: bool) {
    if let Some(v) = incoming {
        if cur.is_none() || wins {
            *cur = Some(v);
        }
    }
}

impl<'s> Pipeline<'s> {
    pub fn new(store: &'s Store, cfg: PipelineConfig) -> Self {
        let registry = Self::build_registry(store);
        Self { store, cfg, issn: IssnLinkingTable::new(), tree: None, registry, resolve_log: None }
    }

    fn build_registry(store: &Store) -> InstitutionRegistry {
        let state = store.read();
        InstitutionRegistry::new(state.iter(EntityKind::Institution).filter_map(|e| match e {
            Entity::Institution(i) => Some(i),
            _ => None,
        }))
    }

    pub fn with_issn_table(mut self, table: IssnLinkingTable) -> Self {
        self.issn = table;
        self
    }

    /// Use `tree` for tagging, seeding or refreshing its concepts in the store.
    pub fn with_concept_tree(mut self, tree: ConceptTree) -> Result<Self, StoreError> {
        let _g = self.store.gate();
        let today = self.store.today();
        let puts: Vec<Entity> = {
            let state = self.store.read();
            tree.concepts()
                .filter_map(|c| {
                    let mut fresh = c.to_entity(today);
                    match state.get(c.id) {
                        Some(Entity::Concept(old)) => {
                            fresh.works_count = old.works_count;
                            fresh.created_date = old.created_date;
                            fresh.updated_date = old.updated_date;
                            (fresh != *old).then_some(Entity::Concept(fresh))
                        }
                        _ => Some(Entity::Concept(fresh)),
                    }
                })
                .collect()
        };
        self.store.commit(puts)?;
        self.tree = Some(tree);
        Ok(self)
    }

    /// Write one JSON line per author and affiliation decision to `w`.
    pub fn with_resolve_log(mut self, w: Box<dyn Write + Send + 's>) -> Self {
        self.resolve_log = Some(w);
        self
    }

    /// Insert registry institutions that the store does not have yet and
    /// rebuild the matching view. Returns how many were written.
    pub fn seed_institutions(&mut self, list: Vec<Institution>) -> Result<usize, StoreError> {
        let written = {
            let _g = self.store.gate();
            let state = self.store.read();
            let puts: Vec<Entity> = list
                .into_iter()
                .filter(|i| !state.contains(i.id))
                .map(|mut i| {
                    i.works_count = 0;
                    Entity::Institution(i)
                })
                .collect();
            drop(state);
            self.store.commit(puts)?.len()
        };
        self.registry = Self::build_registry(self.store);
        Ok(written)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn registry(&self) -> &InstitutionRegistry {
        &self.registry
    }

    fn log(&mut self, line: serde_json::Value) {
        if let Some(w) = self.resolve_log.as_mut() {
            let _ = writeln!(w, "{line}");
        }
    }

    pub fn ingest_parsed(&mut self, parsed: Parsed) -> Result<IngestReport, IngestError> {
        let mut report = self.ingest_stub(&parsed.stub)?;
        let mut warnings = parsed.warnings;
        warnings.append(&mut report.warnings);
        report.warnings = warnings;
        Ok(report)
    }

    pub fn ingest_stub(&mut self, stub: &WorkStub) -> Result<IngestReport, IngestError> {
        if stub.doi.is_none() && stub.title.as_deref().is_none_or(|t| t.trim().is_empty()) {
            return Err(RejectReason::Unidentifiable.into());
        }
        let store = self.store;
        let _g = store.gate();
        let state = store.read();
        let (report, changed, log) = self.resolve(&state, stub)?;
        drop(state);
        store.commit(changed)?;
        for line in log {
            self.log(line);
        }
        Ok(report)
    }

    fn target_work(&self, state: &State, stub: &WorkStub) -> Option<OpenAlexId> {
        if let Some(d) = &stub.doi {
            if let Some(e) = state.by_ceid(EntityKind::Work, d.as_str()) {
                return Some(e.id());
            }
        }
        if let Some(w) = state.work_by_source(stub.source, &stub.source_record_id) {
            return Some(w);
        }
        let fp = fingerprint_from_raw(stub.title.as_deref(), stub.stub_authors.first().map(|a| a.raw_name.as_str()))?;
        state.works_with_fingerprint(&fp).find(|id| {
            let w = state.work(*id).expect("indexed works exist");
            match (&w.doi, &stub.doi) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
        })
    }

    fn resolve_venue(&self, p: &mut Pending, stub: &WorkStub, warnings: &mut Vec<String>) -> Result<Option<OpenAlexId>, StoreError> {
        let today = self.store.today();
        if let Some(first) = stub.issns.first() {
            let issn_l = self.issn.issn_l_of(first);
            let mut group = vec![issn_l.clone()];
            for i in &stub.issns {
                if self.issn.issn_l_of(i) == issn_l {
                    push_unique(&mut group, i.clone());
                } else {
                    warnings.push(format!("ISSN {i} belongs to another venue; ignored"));
                }
            }
            if let Some(Entity::Venue(v)) = p.state.by_ceid(EntityKind::Venue, issn_l.as_str()) {
                let mut next = p.get(v.id).and_then(|e| if let Entity::Venue(v) = e { Some(v.clone()) } else { None }).expect("venue");
                for i in group {
                    push_unique(&mut next.issns, i);
                }
                if next.display_name == issn_l.as_str() {
                    if let Some(name) = &stub.venue_name {
                        next.display_name = name.clone();
                    }
                }
                let id = next.id;
                if Entity::Venue(next.clone()) != *p.get(id).expect("venue") {
                    p.put(Entity::Venue(next));
                }
                return Ok(Some(id));
            }
            let venue = Venue {
                id: self.store.mint(EntityKind::Venue)?,
                display_name: stub.venue_name.clone().unwrap_or_else(|| issn_l.as_str().to_owned()),
                issn_l: Some(issn_l),
                issns: group,
                venue_type: stub.venue_type,
                works_count: 0,
                created_date: today,
                updated_date: today,
            };
            let id = venue.id;
            p.put(Entity::Venue(venue));
            return Ok(Some(id));
        }
        let Some(name) = stub.venue_name.as_ref().filter(|n| !crate::text::fold_alnum(n).is_empty()) else {
            return Ok(None);
        };
        let mut venue = Venue {
            id: OpenAlexId::new(EntityKind::Venue, 1).expect("positive"),
            issn_l: None,
            issns: vec![],
            display_name: name.clone(),
            venue_type: stub.venue_type,
            works_count: 0,
            created_date: today,
            updated_date: today,
        };
        if let Some(id) = p.state.venue_by_name(&venue) {
            return Ok(Some(id));
        }
        venue.id = self.store.mint(EntityKind::Venue)?;
        let id = venue.id;
        p.put(Entity::Venue(venue));
        Ok(Some(id))
    }

    fn signature(state: &State, author: &Author) -> Option<AuthorSignature> {
        let name_key = normalize_name(&author.display_name).ok()?;
        let mut sig = AuthorSignature {
            author: author.id,
            orcid: author.orcid.clone(),
            name_key,
            coauthor_name_keys: BTreeSet::new(),
            venue_ids: BTreeSet::new(),
            work_ids: BTreeSet::new(),
            cited_work_ids: BTreeSet::new(),
        };
        for wid in state.works_of_author(author.id) {
            let Some(w) = state.work(wid) else { continue };
            sig.work_ids.insert(wid);
            sig.venue_ids.extend(w.locations.iter().filter_map(|l| l.venue));
            sig.cited_work_ids.extend(w.referenced_works.iter().copied());
            for a in w.authorships.iter().filter(|a| a.author != author.id) {
                if let Ok(k) = normalize_name(&a.raw_author_name) {
                    sig.coauthor_name_keys.insert(k);
                }
            }
        }
        Some(sig)
    }

    fn candidates(state: &State, stub: &StubAuthor, key: Option<&NameKey>) -> Vec<AuthorSignature> {
        let mut ids: BTreeSet<OpenAlexId> = BTreeSet::new();
        if let Some(o) = &stub.orcid {
            if let Some(e) = state.by_ceid(EntityKind::Author, o.as_str()) {
                ids.insert(e.id());
            }
        }
        if let Some(k) = key {
            ids.extend(state.authors_with_family(k.family()));
        }
        ids.into_iter()
            .filter_map(|id| match state.get(id) {
                Some(Entity::Author(a)) => Self::signature(state, a),
                _ => None,
            })
            .collect()
    }

    #[allow(clippy::type_complexity)]
    fn resolve(
        &mut self,
        state: &State,
        stub: &WorkStub,
    ) -> Result<(IngestReport, Vec<Entity>, Vec<serde_json::Value>), IngestError> {
        let today = self.store.today();
        let mut warnings = Vec::new();
        let mut log = Vec::new();
        let mut p = Pending { state, changed: BTreeMap::new() };

        let target = self.target_work(state, stub);
        let existing: Option<Work> = target.and_then(|id| state.work(id).cloned());
        let incoming_src = SourceRef {
            source: stub.source,
            source_record_id: stub.source_record_id.clone(),
            retrieved_date: stub.retrieved_date,
        };
        let outcome = match &existing {
            None => IngestOutcome::Created,
            Some(w) if w.sources.iter().any(|s| s.source == stub.source && s.source_record_id == stub.source_record_id) => {
                IngestOutcome::Updated
            }
            Some(_) => IngestOutcome::Merged,
        };

        // (1) venue
        let venue = self.resolve_venue(&mut p, stub, &mut warnings)?;

        // References resolvable right now.
        let mut referenced_works = Vec::new();
        let mut unresolved: Vec<Doi> = Vec::new();
        for d in &stub.referenced_dois {
            match state.by_ceid(EntityKind::Work, d.as_str()) {
                Some(e) if Some(e.id()) != target => push_unique(&mut referenced_works, e.id()),
                Some(_) => {}
                None => push_unique(&mut unresolved, d.clone()),
            }
        }

        // (2) authors, (3) institutions
        let keys: Vec<Option<NameKey>> = stub.stub_authors.iter().map(|a| normalize_name(&a.raw_name).ok()).collect();
        let mut ctx = WorkContext {
            venue,
            referenced_works: referenced_works.iter().copied().collect(),
            coauthor_name_keys: BTreeSet::new(),
            work: target,
            excluded: BTreeSet::new(),
        };
        let mut new_orcids: BTreeSet<String> = BTreeSet::new();
        let mut authorships = Vec::new();
        for (i, sa) in stub.stub_authors.iter().enumerate() {
            if sa.raw_name.trim().is_empty() {
                warnings.push("author without a name skipped".into());
                continue;
            }
            ctx.coauthor_name_keys =
                keys.iter().enumerate().filter(|(j, _)| *j != i).filter_map(|(_, k)| k.clone()).collect();
            let cands = Self::candidates(state, sa, keys[i].as_ref());
            let decision = disambiguate_author(sa, &ctx, &cands, &self.cfg.author_weights, self.cfg.author_threshold);
            log.push(json!({
                "type": "author",
                "source_record_id": stub.source_record_id,
                "raw_name": sa.raw_name,
                "orcid": sa.orcid,
                "candidates": cands.len(),
                "decision": decision,
            }));
            let author_id = match decision {
                AuthorDecision::Match { author, .. } => {
                    let Some(Entity::Author(a)) = p.get(author) else { unreachable!("candidates come from the store") };
                    let mut a = a.clone();
                    let mut names: BTreeSet<String> = a.alternate_names.iter().cloned().collect();
                    names.insert(a.display_name.clone());
                    names.insert(sa.raw_name.clone());
                    (a.display_name, a.alternate_names) = choose_names(names);
                    if a.orcid.is_none() {
                        if let Some(o) = &sa.orcid {
                            if state.by_ceid(EntityKind::Author, o.as_str()).is_none() && new_orcids.insert(o.as_str().to_owned()) {
                                a.orcid = Some(o.clone());
                            }
                        }
                    }
                    if Some(&Entity::Author(a.clone())) != p.get(author) {
                        p.put(Entity::Author(a));
                    }
                    author
                }
                AuthorDecision::CreateNew { .. } => {
                    let mut orcid = sa.orcid.clone();
                    if let Some(o) = &orcid {
                        if !new_orcids.insert(o.as_str().to_owned()) || state.by_ceid(EntityKind::Author, o.as_str()).is_some() {
                            warnings.push(format!("ORCID {o} repeated on one record; dropped"));
                            orcid = None;
                        }
                    }
                    let a = Author {
                        id: self.store.mint(EntityKind::Author)?,
                        orcid,
                        display_name: sa.raw_name.clone(),
                        alternate_names: vec![],
                        works_count: 0,
                        cited_by_count: 0,
                        created_date: today,
                        updated_date: today,
                    };
                    let id = a.id;
                    p.put(Entity::Author(a));
                    id
                }
            };
            ctx.excluded.insert(author_id);

            let mut institutions = Vec::new();
            for raw in &sa.raw_affiliations {
                let cands = extract_affiliation_candidates(raw);
                let (ids, details) = match_institution_detailed(&cands, &self.registry, self.cfg.institution_threshold);
                log.push(json!({
                    "type": "affiliation",
                    "source_record_id": stub.source_record_id,
                    "raw": raw,
                    "matches": details,
                }));
                for id in ids {
                    push_unique(&mut institutions, id);
                }
            }
            authorships.push(Authorship {
                author: author_id,
                institutions,
                raw_author_name: sa.raw_name.clone(),
                raw_affiliation_strings: sa.raw_affiliations.clone(),
                position: Position::First,
            });
        }

        let location = (venue.is_some() || stub.url.is_some()).then(|| HostLocation {
            venue,
            url: stub.url.clone(),
            version: stub.version_hint,
            license: stub.license.clone(),
            primary: true,
        });

        // (4) work upsert or merge
        let mut work = match existing {
            None => Work {
                id: self.store.mint(EntityKind::Work)?,
                doi: stub.doi.clone(),
                title: stub.title.clone(),
                r#abstract: stub.r#abstract.clone(),
                publication_year: stub.publication_year,
                work_type: stub.work_type,
                authorships,
                locations: location.into_iter().collect(),
                concepts: Vec::new(),
                referenced_works,
                unresolved_references: unresolved,
                cited_by_count: 0,
                sources: vec![incoming_src],
                created_date: today,
                updated_date: today,
            },
            Some(mut w) => {
                let governing = w.sources.iter().map(SourceRef::precedence).max();
                let wins = governing.is_none_or(|g| incoming_src.precedence() >= g);
                set_field(&mut w.doi, stub.doi.clone(), wins);
                set_field(&mut w.title, stub.title.clone(), wins);
                set_field(&mut w.r#abstract, stub.r#abstract.clone(), wins);
                set_field(&mut w.publication_year, stub.publication_year, wins);
                if wins {
                    w.work_type = stub.work_type;
                }
                w.authorships = merge_authorships(w.authorships, authorships, wins);
                if let Some(loc) = location {
                    match w.locations.iter_mut().find(|l| l.venue == loc.venue && l.url == loc.url) {
                        Some(l) if wins => {
                            l.version = loc.version;
                            set_field(&mut l.license, loc.license, true);
                        }
                        Some(_) => {}
                        None => w.locations.push(loc),
                    }
                }
                for r in referenced_works {
                    push_unique(&mut w.referenced_works, r);
                }
                for d in unresolved {
                    push_unique(&mut w.unresolved_references, d);
                }
                match w.sources.iter_mut().find(|s| s.source == incoming_src.source && s.source_record_id == incoming_src.source_record_id) {
                    Some(s) => s.retrieved_date = s.retrieved_date.max(incoming_src.retrieved_date),
                    None => w.sources.push(incoming_src),
                }
                w.sources.sort();
                w
            }
        };
        let own_doi = work.doi.clone();
        let own_id = work.id;
        work.referenced_works.retain(|r| *r != own_id);
        work.unresolved_references.retain(|d| Some(d) != own_doi.as_ref());
        let n = work.authorships.len();
        for (i, a) in work.authorships.iter_mut().enumerate() {
            a.position = Position::for_index(i, n);
        }

        // (5) primary location
        select_primary_location(&mut work.locations, |v| p.venue_type(v));

        // (6) concepts
        if let Some(tree) = &self.tree {
            work.concepts = tag_work(work.title.as_deref(), work.r#abstract.as_deref(), tree, &self.cfg.tagger)
                .into_iter()
                .filter(|c| state.contains(c.id))
                .collect();
        }

        // (7) works that cited this DOI before it was stored
        if let Some(d) = &work.doi {
            let citers: Vec<OpenAlexId> = state.citers_of_doi(d.as_str()).filter(|c| *c != own_id).collect();
            for c in citers {
                let Some(Entity::Work(cw)) = p.get(c) else { continue };
                let mut cw = cw.clone();
                cw.unresolved_references.retain(|u| u != d);
                push_unique(&mut cw.referenced_works, own_id);
                p.put(Entity::Work(cw));
            }
        }

        let report = IngestReport { source_record_id: stub.source_record_id.clone(), outcome, work_id: own_id, warnings };
        p.put(Entity::Work(work));
        Ok((report, p.changed.into_values().collect(), log))
    }
}

/// Union two authorship lists by author id. The winning list keeps its
/// order; raw affiliation strings and institutions from both survive.
fn merge_authorships(existing: Vec<Authorship>, incoming: Vec<Authorship>, incoming_wins: bool) -> Vec<Authorship> {
    if existing.is_empty() {
        return incoming;
    }
    let (mut primary, secondary) = if incoming_wins { (incoming, existing) } else { (existing, incoming) };
    for a in secondary {
        match primary.iter_mut().find(|p| p.author == a.author) {
            Some(p) => {
                for s in a.raw_affiliation_strings {
                    push_unique(&mut p.raw_affiliation_strings, s);
                }
                for i in a.institutions {
                    push_unique(&mut p.institutions, i);
                }
            }
            None => primary.push(a),
        }
    }
    primary
}
