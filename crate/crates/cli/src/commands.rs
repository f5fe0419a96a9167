use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{json, Value};

use openindex_core::api::{self, Api};
use openindex_core::concepts::{coverage_report, ConceptTree};
use openindex_core::config::Config;
use openindex_core::identifiers::IssnLinkingTable;
use openindex_core::ingest::{parse_crossref, parse_pubmed_set, HarvestClient, IngestError, IngestOutcome, Parsed, Pipeline, RejectReason};
use openindex_core::model::{Entity, EntityKind, Institution, SourceKind};
use openindex_core::store::{Clock, Store, StoreError, StoreOptions};

use crate::{default_config_path, Cli, CliError, Command, Outcome};

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut flags: Vec<(String, String)> = Vec::new();
    if let Some(d) = &cli.data_dir {
        flags.push(("data_dir".into(), d.display().to_string()));
    }
    if let Command::Serve { port: Some(p) } = &cli.command {
        flags.push(("port".into(), p.to_string()));
    }
    for s in &cli.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::Input(format!("--set expects KEY=VALUE, got {s:?}")))?;
        flags.push((k.trim().to_owned(), v.to_owned()));
    }
    let flag_refs: Vec<(&str, String)> = flags.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    let (path, required) = match &cli.config {
        Some(p) => (p.clone(), true),
        None => (default_config_path(), false),
    };
    let cfg = Config::load(&path, required, std::env::vars(), &flag_refs)?;

    match cli.command {
        Command::Ingest { source, input, report } => ingest(&cfg, source.into(), &input, report.as_deref()),
        Command::Harvest { endpoint, cursor, rows } => harvest(&cfg, &endpoint, cursor, rows),
        Command::Serve { .. } => serve(&cfg),
        Command::Dump { out } => {
            let store = open_store(&cfg)?;
            let m = store.export_dump(&out).map_err(|e| CliError::Dump(e.to_string()))?;
            let totals: BTreeMap<&str, usize> = m.kinds.iter().map(|k| (k.kind.as_str(), k.total)).collect();
            ok(json!({ "out": out, "created_date": m.created_date, "records": totals }))
        }
        Command::Load { input } => {
            let store = open_store(&cfg)?;
            let r = store.import_dump(&input).map_err(|e| CliError::Dump(e.to_string()))?;
            ok(json!({ "in": input, "files": r.files, "records": r.records }))
        }
        Command::Stats => stats(&cfg),
        Command::Validate => {
            let store = open_store(&cfg)?;
            let violations: Vec<String> = store.integrity_check().iter().map(ToString::to_string).collect();
            let code = if violations.is_empty() { 0 } else { 6 };
            Ok(Outcome { summary: json!({ "violations": violations.len(), "details": violations }), code })
        }
    }
}

fn ok(summary: Value) -> Result<Outcome, CliError> {
    Ok(Outcome { summary, code: 0 })
}

fn open_store(cfg: &Config) -> Result<Store, CliError> {
    let opts = StoreOptions { sync: cfg.sync_writes, clock: Clock::System, ..Default::default() };
    Store::open_with(&cfg.data_dir, opts).map_err(|e| match e {
        StoreError::Busy(_) => CliError::Busy(e.to_string()),
        other => CliError::Internal(other.to_string()),
    })
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn issn_table(cfg: &Config) -> Result<IssnLinkingTable, CliError> {
    match &cfg.issn_table {
        Some(p) => IssnLinkingTable::load(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => Ok(IssnLinkingTable::new()),
    }
}

fn pipeline<'s>(store: &'s Store, cfg: &Config) -> Result<Pipeline<'s>, CliError> {
    let mut p = Pipeline::new(store, cfg.pipeline()).with_issn_table(issn_table(cfg)?);
    if let Some(path) = &cfg.concept_tree {
        let tree = ConceptTree::load(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        p = p.with_concept_tree(tree).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    if let Some(path) = &cfg.institution_registry {
        let text = read_input(path)?;
        let list = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str::<Institution>(l).map_err(|e| CliError::Input(format!("{} line {}: {e}", path.display(), i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        p.seed_institutions(list).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    if let Some(path) = &cfg.resolve_report {
        let f = File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        p = p.with_resolve_log(Box::new(BufWriter::new(f)));
    }
    Ok(p)
}

#[derive(Debug, Default, Serialize)]
struct Tally {
    read: usize,
    created: usize,
    updated: usize,
    merged: usize,
    rejected: usize,
}

impl Tally {
    fn code(&self) -> u8 {
        if self.rejected == 0 { 0 } else { 3 }
    }
}

/// Pipelines one parsed record, counting its outcome and writing its report line.
struct Ingestor<'s> {
    pipeline: Pipeline<'s>,
    tally: Tally,
    report: Option<BufWriter<File>>,
}

impl Ingestor<'_> {
    fn feed(&mut self, label: &str, parsed: Result<Parsed, String>) -> Result<(), CliError> {
        self.tally.read += 1;
        let result = match parsed {
            Ok(p) => match self.pipeline.ingest_parsed(p) {
                Ok(r) => Ok(r),
                Err(IngestError::Rejected(reason)) => Err(reason.to_string()),
                Err(other) => return Err(CliError::Internal(format!("{label}: {other}"))),
            },
            Err(msg) => Err(msg),
        };
        let line = match result {
            Ok(r) => {
                match r.outcome {
                    IngestOutcome::Created => self.tally.created += 1,
                    IngestOutcome::Updated => self.tally.updated += 1,
                    IngestOutcome::Merged => self.tally.merged += 1,
                }
                serde_json::to_value(&r).unwrap()
            }
            Err(msg) => {
                self.tally.rejected += 1;
                json!({ "source_record_id": label, "outcome": "rejected", "reason": msg })
            }
        };
        if let Some(w) = &mut self.report {
            writeln!(w, "{line}").map_err(|e| CliError::Internal(e.to_string()))?;
        }
        Ok(())
    }

    fn finish(mut self, store: &Store) -> Result<Tally, CliError> {
        if let Some(w) = &mut self.report {
            w.flush().map_err(|e| CliError::Internal(e.to_string()))?;
        }
        drop(self.pipeline);
        store.recompute_aggregates().map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(self.tally)
    }
}

fn json_records(text: &str) -> Vec<Result<Value, String>> {
    if text.trim_start().starts_with('[') {
        return match serde_json::from_str::<Vec<Value>>(text) {
            Ok(v) => v.into_iter().map(Ok).collect(),
            Err(e) => vec![Err(format!("not a JSON array: {e}"))],
        };
    }
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(|e| format!("malformed JSON: {e}"))).collect()
}

fn ingest(cfg: &Config, source: SourceKind, input: &Path, report: Option<&Path>) -> Result<Outcome, CliError> {
    let text = read_input(input)?;
    // Parse the whole file before taking the store lock.
    let parsed: Vec<(String, Result<Parsed, String>)> = match source {
        SourceKind::Pubmed => parse_pubmed_set(&text, today())
            .map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("article {}", i + 1), r.map_err(|e| e.to_string())))
            .collect(),
        _ => json_records(&text)
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("line {}", i + 1), r.and_then(|v| parse_crossref(&v, source, today()).map_err(|e: RejectReason| e.to_string()))))
            .collect(),
    };
    let report = match report {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?)),
        None => None,
    };
    let store = open_store(cfg)?;
    let mut ing = Ingestor { pipeline: pipeline(&store, cfg)?, tally: Tally::default(), report };
    for (label, p) in parsed {
        ing.feed(&label, p)?;
    }
    let tally = ing.finish(&store)?;
    let code = tally.code();
    Ok(Outcome { summary: serde_json::to_value(&tally).unwrap(), code })
}

/// Date used when a record carries none.
fn today() -> NaiveDate {
    Clock::System.today()
}

fn harvest(cfg: &Config, endpoint: &str, cursor: Option<String>, rows: usize) -> Result<Outcome, CliError> {
    let store = open_store(cfg)?;
    let client = HarvestClient::new(endpoint);
    let mut ing = Ingestor { pipeline: pipeline(&store, cfg)?, tally: Tally::default(), report: None };
    let mut pages = client.pages(cursor, rows);
    let mut failure = None;
    let mut served = 0usize;
    loop {
        // Cursor of the page about to be requested: the resume point if it fails.
        let resume = pages.cursor().map(str::to_owned);
        match pages.next() {
            None => break,
            Some(Ok(page)) => {
                served += 1;
                for (i, rec) in page.records.iter().enumerate() {
                    let label = format!("page {served} item {}", i + 1);
                    ing.feed(&label, parse_crossref(rec, SourceKind::Crossref, today()).map_err(|e| e.to_string()))?;
                }
            }
            Some(Err(e)) => {
                failure = Some((e.to_string(), resume));
                break;
            }
        }
    }
    let final_cursor = pages.cursor().map(str::to_owned);
    let tally = ing.finish(&store)?;
    let mut summary = serde_json::to_value(&tally).unwrap();
    let code = match failure {
        Some((message, resume)) => {
            summary["cursor"] = json!(resume);
            summary["error"] = json!(message);
            5
        }
        None => {
            summary["cursor"] = json!(final_cursor);
            tally.code()
        }
    };
    summary["pages"] = json!(served);
    Ok(Outcome { summary, code })
}

fn serve(cfg: &Config) -> Result<Outcome, CliError> {
    let store = std::sync::Arc::new(open_store(cfg)?);
    let mut api = Api::new(store, cfg.api());
    api.issn_table = issn_table(cfg)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((cfg.bind.as_str(), cfg.port))
            .await
            .map_err(|e| CliError::Input(format!("cannot bind {}:{}: {e}", cfg.bind, cfg.port)))?;
        let addr = listener.local_addr().map_err(|e| CliError::Internal(e.to_string()))?;
        eprintln!("listening on http://{addr}");
        api::serve(std::sync::Arc::new(api), listener, cfg.max_connections, shutdown_signal())
            .await
            .map_err(|e| CliError::Internal(e.to_string()))?;
        ok(json!({ "stopped": addr.to_string() }))
    })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

fn stats(cfg: &Config) -> Result<Outcome, CliError> {
    let store = open_store(cfg)?;
    let st = store.read();
    let mut ceid = serde_json::Map::new();
    for kind in EntityKind::ALL {
        let n = st.len(kind);
        let with = st.iter(kind).filter(|e| e.ceid().is_some()).count();
        let frac = if n == 0 { 0.0 } else { with as f64 / n as f64 };
        ceid.insert(kind.plural().into(), json!({ "records": n, "with_external_id": with, "fraction": frac }));
    }
    let coverage = coverage_report(st.iter(EntityKind::Work).filter_map(|e| match e {
        Entity::Work(w) => Some(w),
        _ => None,
    }));
    ok(json!({ "counts": st.counts(), "external_id_coverage": ceid, "concept_coverage": coverage }))
}
