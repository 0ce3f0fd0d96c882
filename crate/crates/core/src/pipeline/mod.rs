//! End-to-end orchestration: stages, artifacts and the stage cache.

mod config;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    AggregationConfig, CompoundConfig, InputPaths, Inputs, OutputConfig, PipelineConfig, RfeConfig, RunConfig,
};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const CACHE_DIR: &str = ".cache";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Segment,
    Compounds,
    Features,
    Aggregate,
    Gamma,
    Rfe,
    Wcs,
    Report,
}

impl Stage {
    /// Dependency order.
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Segment,
        Stage::Compounds,
        Stage::Features,
        Stage::Aggregate,
        Stage::Gamma,
        Stage::Rfe,
        Stage::Wcs,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Segment => "segment",
            Stage::Compounds => "compounds",
            Stage::Features => "features",
            Stage::Aggregate => "aggregate",
            Stage::Gamma => "gamma",
            Stage::Rfe => "rfe",
            Stage::Wcs => "wcs",
            Stage::Report => "report",
        }
    }

    /// Files this stage writes into the output directory.
    pub fn produces(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["translations.csv", "ingest.json"],
            Stage::Segment => &["segments.json", "affixes.csv"],
            Stage::Compounds => &["compounds.csv"],
            Stage::Features => &["features.csv", "bootstrap_ranking.csv", "imputation.json"],
            Stage::Aggregate => &["ranking.csv"],
            Stage::Gamma => &["gamma.csv"],
            Stage::Rfe => &["rfe.json"],
            Stage::Wcs => &["consensus.csv", "inventory.csv", "heterogeneity.svg"],
            Stage::Report => &["report.md"],
        }
    }

    /// Upstream artifacts that must already exist.
    pub fn requires(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest | Stage::Wcs => &[],
            Stage::Segment => &["translations.csv"],
            Stage::Compounds => &["affixes.csv"],
            Stage::Features => &["translations.csv", "segments.json", "compounds.csv"],
            Stage::Aggregate | Stage::Gamma | Stage::Rfe => &["features.csv"],
            Stage::Report => &["ranking.csv", "gamma.csv"],
        }
    }

    /// Artifacts read when present but not required.
    fn optional(self) -> &'static [&'static str] {
        match self {
            Stage::Report => &["rfe.json", "inventory.csv", "imputation.json"],
            _ => &[],
        }
    }

    /// Raw inputs read by this stage.
    fn inputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["lexicon", "seeds"],
            Stage::Segment | Stage::Compounds => &["lexicon"],
            Stage::Features => &["seeds", "concreteness", "ngram", "treebank", "etymology"],
            Stage::Gamma | Stage::Rfe => &["seeds"],
            Stage::Wcs => &["wcs"],
            Stage::Aggregate | Stage::Report => &[],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub rows: usize,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
    pub dropped_colors: Vec<String>,
    /// Wall-clock milliseconds per stage; the only non-reproducible field.
    pub timing_ms: BTreeMap<String, u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    rows: usize,
    outputs: BTreeMap<String, String>,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(digest_bytes(&bytes))
}

/// The output directory plus bookkeeping for files written by a stage.
pub(crate) struct Workspace {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Workspace {
    fn new(dir: PathBuf) -> Self {
        Workspace {
            dir,
            written: Vec::new(),
        }
    }

    pub(crate) fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub(crate) fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(p))
        }
    }

    pub(crate) fn read(&self, name: &str) -> Result<Vec<u8>> {
        let p = self.require(name)?;
        fs::read(&p).map_err(|e| Error::io(&p, e))
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// half-written artifact.
    pub(crate) fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.path(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
        self.written.push(target);
        Ok(())
    }

    fn discard_written(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}

pub(crate) struct Context<'a> {
    pub config: &'a PipelineConfig,
    pub inputs: &'a Inputs,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Ignore the stage cache.
    pub force: bool,
}

fn cache_key(ctx: &Context, ws: &Workspace, stage: Stage, config_hash: &str) -> Result<String> {
    let mut h = Sha256::new();
    h.update(stage.name());
    h.update(config_hash);
    let named: BTreeMap<&str, PathBuf> = ctx.inputs.named().into_iter().collect();
    for name in stage.inputs() {
        if let Some(p) = named.get(name) {
            h.update(name);
            h.update(digest_file(p)?);
        }
    }
    for name in stage.requires() {
        h.update(name);
        h.update(digest_file(&ws.require(name)?)?);
    }
    for name in stage.optional() {
        let p = ws.path(name);
        if p.is_file() {
            h.update(name);
            h.update(digest_file(&p)?);
        }
    }
    Ok(hex::encode(h.finalize()))
}

fn cache_path(ws: &Workspace, stage: Stage) -> PathBuf {
    ws.path(CACHE_DIR).join(format!("{}.json", stage.name()))
}

/// The cached row count if every output still matches the cache entry.
fn cache_hit(ws: &Workspace, stage: Stage, key: &str) -> Option<usize> {
    let text = fs::read_to_string(cache_path(ws, stage)).ok()?;
    let entry: CacheEntry = serde_json::from_str(&text).ok()?;
    if entry.key != key {
        return None;
    }
    for (name, want) in &entry.outputs {
        if digest_file(&ws.path(name)).ok()? != *want {
            return None;
        }
    }
    Some(entry.rows)
}

fn store_cache(ws: &Workspace, stage: Stage, key: String, rows: usize) -> Result<()> {
    let mut outputs = BTreeMap::new();
    for name in stage.produces() {
        let p = ws.path(name);
        if p.is_file() {
            outputs.insert(name.to_string(), digest_file(&p)?);
        }
    }
    let entry = CacheEntry { key, rows, outputs };
    let dir = ws.path(CACHE_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let p = cache_path(ws, stage);
    let json = serde_json::to_string_pretty(&entry).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(&p, json).map_err(|e| Error::io(&p, e))
}

fn execute(
    ctx: &Context,
    ws: &mut Workspace,
    stage: Stage,
    config_hash: &str,
    options: RunOptions,
) -> Result<StageRecord> {
    let key = cache_key(ctx, ws, stage, config_hash)?;
    if !options.force {
        if let Some(rows) = cache_hit(ws, stage, &key) {
            log::info!("{stage}: cached");
            return Ok(StageRecord {
                stage,
                rows,
                cached: true,
            });
        }
    }
    log::info!("{stage}: running");
    let _ = fs::remove_file(cache_path(ws, stage));
    match stages::run(ctx, ws, stage) {
        Ok(rows) => {
            ws.written.clear();
            store_cache(ws, stage, key, rows)?;
            Ok(StageRecord {
                stage,
                rows,
                cached: false,
            })
        }
        Err(e) => {
            ws.discard_written();
            Err(e)
        }
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn wrap(stage: Stage, e: Error) -> Error {
    match e {
        Error::Config { .. } | Error::Stage { .. } => e,
        other => Error::Stage {
            stage: stage.name(),
            source: Box::new(other),
        },
    }
}

/// Runs one stage from cached upstream artifacts.
pub fn run_stage(config: &PipelineConfig, stage: Stage, options: RunOptions) -> Result<StageRecord> {
    let inputs = config.validate()?;
    if stage == Stage::Wcs && inputs.wcs.is_none() {
        return Err(Error::config("inputs.wcs", "missing"));
    }
    let hash = config.hash();
    let ctx = Context {
        config,
        inputs: &inputs,
    };
    let mut ws = Workspace::new(config.output_dir());
    with_pool(config.run.jobs, || execute(&ctx, &mut ws, stage, &hash, options))?.map_err(|e| wrap(stage, e))
}

/// Runs every stage in dependency order and writes `manifest.json`.
pub fn run_pipeline(config: &PipelineConfig, options: RunOptions) -> Result<RunManifest> {
    let inputs = config.validate()?;
    let hash = config.hash();
    let ctx = Context {
        config,
        inputs: &inputs,
    };
    let mut ws = Workspace::new(config.output_dir());
    let mut records = Vec::new();
    let mut timing = BTreeMap::new();
    with_pool(config.run.jobs, || -> Result<()> {
        for stage in Stage::ALL {
            if (stage == Stage::Wcs && inputs.wcs.is_none()) || (stage == Stage::Rfe && !config.rfe.enabled) {
                continue;
            }
            let t = Instant::now();
            let rec = execute(&ctx, &mut ws, stage, &hash, options).map_err(|e| wrap(stage, e))?;
            timing.insert(stage.name().to_string(), t.elapsed().as_millis() as u64);
            records.push(rec);
        }
        Ok(())
    })??;

    let mut digests = BTreeMap::new();
    for (name, p) in inputs.named() {
        digests.insert(name.to_string(), digest_file(&p)?);
    }
    let imputation: stages::Imputation = serde_json::from_slice(&ws.read("imputation.json")?)
        .map_err(|e| Error::Internal(format!("imputation.json: {e}")))?;
    let manifest = RunManifest {
        version: VERSION.to_string(),
        config_hash: hash,
        inputs: digests,
        stages: records,
        dropped_colors: imputation.dropped,
        timing_ms: timing,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    ws.write("manifest.json", json.as_bytes())?;
    Ok(manifest)
}
