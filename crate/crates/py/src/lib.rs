//! Python module `openindex`: identifier normalization, concept tagging,
//! affiliation matching and a local store with ingest, query and dumps.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use openindex_core::api::{Api, ApiConfig};
use openindex_core::concepts::{tag_work, ConceptTree, TaggerConfig};
use openindex_core::disambiguation::{extract_affiliation_candidates, match_institution, InstitutionRegistry, DEFAULT_INSTITUTION_THRESHOLD};
use openindex_core::identifiers::{self, IssnLinkingTable};
use openindex_core::ingest::{parse_crossref, IngestError, IngestOutcome, Pipeline, PipelineConfig};
use openindex_core::model::{Institution, OpenAlexId, SourceKind};
use openindex_core::store::{Clock, Store, StoreError, StoreOptions};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn store_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Canonical lowercase DOI without resolver prefix.
#[pyfunction]
fn normalize_doi(raw: &str) -> PyResult<String> {
    identifiers::normalize_doi(raw).map(String::from).map_err(value_err)
}

#[pyfunction]
fn validate_orcid(raw: &str) -> PyResult<String> {
    identifiers::validate_orcid(raw).map(String::from).map_err(value_err)
}

#[pyfunction]
fn validate_issn(raw: &str) -> PyResult<String> {
    identifiers::validate_issn(raw).map(String::from).map_err(value_err)
}

#[pyfunction]
fn validate_ror(raw: &str) -> PyResult<String> {
    identifiers::validate_ror(raw).map(String::from).map_err(value_err)
}

#[pyfunction]
fn validate_wikidata(raw: &str) -> PyResult<String> {
    identifiers::validate_wikidata(raw).map(String::from).map_err(value_err)
}

/// `"W12"` or its URL → `(kind plural, serial, url)`.
#[pyfunction]
fn parse_id(text: &str) -> PyResult<(String, u64, String)> {
    let id = OpenAlexId::parse(text).map_err(value_err)?;
    Ok((id.kind().plural().to_owned(), id.serial(), id.url()))
}

/// Normalized organization segments of an affiliation string.
#[pyfunction]
fn affiliation_candidates(raw: &str) -> Vec<String> {
    extract_affiliation_candidates(raw)
}

#[pyclass(name = "ConceptTree", frozen)]
struct PyConceptTree {
    tree: ConceptTree,
}

#[pymethods]
impl PyConceptTree {
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        ConceptTree::from_jsonl(text).map(|tree| Self { tree }).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ConceptTree::load(&path).map(|tree| Self { tree }).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.tree.len()
    }

    fn roots(&self) -> Vec<String> {
        self.tree.roots().iter().map(|id| id.short()).collect()
    }

    fn ancestors(&self, id: &str) -> PyResult<Vec<String>> {
        let id = OpenAlexId::parse(id).map_err(value_err)?;
        Ok(self.tree.ancestors(id).map(OpenAlexId::short).collect())
    }

    /// `[(concept id, score, inherited)]`, highest score first.
    #[pyo3(signature = (title=None, abstract_text=None))]
    fn tag(&self, title: Option<&str>, abstract_text: Option<&str>) -> Vec<(String, f64, bool)> {
        tag_work(title, abstract_text, &self.tree, &TaggerConfig::default())
            .into_iter()
            .map(|c| (c.id.short(), c.score, c.inherited))
            .collect()
    }
}

#[pyclass(name = "InstitutionRegistry", frozen)]
struct PyRegistry {
    registry: InstitutionRegistry,
}

fn institutions_from_jsonl(text: &str) -> PyResult<Vec<Institution>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| value_err(format!("line {}: {e}", i + 1))))
        .collect()
}

#[pymethods]
impl PyRegistry {
    /// One institution record per line.
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        let list = institutions_from_jsonl(text)?;
        Ok(Self { registry: InstitutionRegistry::new(&list) })
    }

    #[pyo3(signature = (affiliation, threshold=DEFAULT_INSTITUTION_THRESHOLD))]
    fn match_affiliation(&self, affiliation: &str, threshold: f64) -> Vec<String> {
        let cands = extract_affiliation_candidates(affiliation);
        match_institution(&cands, &self.registry, threshold).into_iter().map(OpenAlexId::short).collect()
    }
}

/// A store directory opened for reading and writing. Holds the store lock
/// until garbage-collected.
#[pyclass(name = "Store", frozen)]
struct PyStore {
    store: Arc<Store>,
    issn_table: Mutex<IssnLinkingTable>,
    tree: Mutex<Option<ConceptTree>>,
    institutions: Mutex<Vec<Institution>>,
}

#[pymethods]
impl PyStore {
    #[new]
    #[pyo3(signature = (path, sync=true))]
    fn new(path: PathBuf, sync: bool) -> PyResult<Self> {
        let store = Store::open_with(&path, StoreOptions { sync, clock: Clock::System, ..Default::default() }).map_err(|e| match e {
            StoreError::Io(io) => PyOSError::new_err(io.to_string()),
            other => store_err(other),
        })?;
        Ok(Self {
            store: Arc::new(store),
            issn_table: Mutex::new(IssnLinkingTable::new()),
            tree: Mutex::new(None),
            institutions: Mutex::new(Vec::new()),
        })
    }

    /// Two-column `ISSN,ISSN-L` CSV text used by later ingests and lookups.
    fn set_issn_table(&self, csv: &str) -> PyResult<()> {
        *self.issn_table.lock().unwrap() = IssnLinkingTable::from_csv_reader(csv.as_bytes()).map_err(value_err)?;
        Ok(())
    }

    fn set_concept_tree(&self, tree: &PyConceptTree) {
        *self.tree.lock().unwrap() = Some(tree.tree.clone());
    }

    /// Institution records (JSON lines) to seed before the next ingest.
    fn set_institutions(&self, jsonl: &str) -> PyResult<()> {
        *self.institutions.lock().unwrap() = institutions_from_jsonl(jsonl)?;
        Ok(())
    }

    /// Ingest Crossref-shaped JSON records. Returns outcome counts,
    /// including `rejected`.
    #[pyo3(signature = (records, source="crossref"))]
    fn ingest(&self, records: Vec<String>, source: &str) -> PyResult<BTreeMap<String, usize>> {
        let source = SourceKind::parse(source).ok_or_else(|| value_err(format!("unknown source {source:?}")))?;
        let mut p = Pipeline::new(&self.store, PipelineConfig::default()).with_issn_table(self.issn_table.lock().unwrap().clone());
        if let Some(tree) = self.tree.lock().unwrap().clone() {
            p = p.with_concept_tree(tree).map_err(store_err)?;
        }
        let seed = std::mem::take(&mut *self.institutions.lock().unwrap());
        if !seed.is_empty() {
            p.seed_institutions(seed).map_err(store_err)?;
        }
        let mut counts: BTreeMap<String, usize> =
            ["created", "updated", "merged", "rejected"].into_iter().map(|k| (k.to_owned(), 0)).collect();
        let today = self.store.today();
        for text in &records {
            let parsed = serde_json::from_str(text).ok().and_then(|v| parse_crossref(&v, source, today).ok());
            let key = match parsed.map(|parsed| p.ingest_parsed(parsed)) {
                None | Some(Err(IngestError::Rejected(_))) => "rejected",
                Some(Err(other)) => return Err(store_err(other)),
                Some(Ok(r)) => match r.outcome {
                    IngestOutcome::Created => "created",
                    IngestOutcome::Updated => "updated",
                    IngestOutcome::Merged => "merged",
                },
            };
            *counts.get_mut(key).unwrap() += 1;
        }
        drop(p);
        self.store.recompute_aggregates().map_err(store_err)?;
        Ok(counts)
    }

    /// Serve one read request through the REST handler: `(status, JSON body)`.
    #[pyo3(signature = (path, query=None))]
    fn request(&self, path: &str, query: Option<&str>) -> (u16, String) {
        let mut api = Api::new(self.store.clone(), ApiConfig::default());
        api.issn_table = self.issn_table.lock().unwrap().clone();
        let r = api.handle("GET", path, query);
        (r.status, r.body)
    }

    fn counts(&self) -> BTreeMap<String, usize> {
        self.store.read().counts().into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
    }

    fn integrity_check(&self) -> Vec<String> {
        self.store.integrity_check().iter().map(ToString::to_string).collect()
    }

    fn export_dump(&self, out_dir: PathBuf) -> PyResult<BTreeMap<String, usize>> {
        let m = self.store.export_dump(&out_dir).map_err(store_err)?;
        Ok(m.kinds.into_iter().map(|k| (k.kind, k.total)).collect())
    }

    fn import_dump(&self, in_dir: PathBuf) -> PyResult<BTreeMap<String, usize>> {
        Ok(self.store.import_dump(&in_dir).map_err(store_err)?.records)
    }
}

#[pymodule]
fn openindex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_doi, m)?)?;
    m.add_function(wrap_pyfunction!(validate_orcid, m)?)?;
    m.add_function(wrap_pyfunction!(validate_issn, m)?)?;
    m.add_function(wrap_pyfunction!(validate_ror, m)?)?;
    m.add_function(wrap_pyfunction!(validate_wikidata, m)?)?;
    m.add_function(wrap_pyfunction!(parse_id, m)?)?;
    m.add_function(wrap_pyfunction!(affiliation_candidates, m)?)?;
    m.add_class::<PyConceptTree>()?;
    m.add_class::<PyRegistry>()?;
    m.add_class::<PyStore>()?;
    Ok(())
}
