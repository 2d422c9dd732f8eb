//! CSV and metadata writers.
//!
//! CSV headers are fixed for a given [`SCHEMA_VERSION`]; the version is
//! recorded in every metadata record.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use ermtree::TabularMdp;
use serde::Serialize;

use crate::table::TableRun;
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;
pub const EPISODES_FILE: &str = "episodes.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Serialize)]
struct EpisodeRow<'a> {
    algorithm: &'a str,
    beta: f64,
    seed: usize,
    discounted_cost: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    algorithm: &'a str,
    beta: f64,
    n: usize,
    erm: f64,
    ci_lo: f64,
    ci_hi: f64,
}

/// `algorithm,beta,seed,discounted_cost`, one row per episode.
pub fn write_episodes_csv<W: Write>(run: &TableRun, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &run.results {
        for (seed, &c) in r.costs.iter().enumerate() {
            out.serialize(EpisodeRow { algorithm: r.algorithm.name(), beta: r.beta, seed, discounted_cost: c })?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `algorithm,beta,n,erm,ci_lo,ci_hi`, one row per cell.
pub fn write_summary_csv<W: Write>(run: &TableRun, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &run.results {
        out.serialize(SummaryRow {
            algorithm: r.algorithm.name(),
            beta: r.beta,
            n: r.iterations,
            erm: r.erm.point,
            ci_lo: r.erm.lo,
            ci_hi: r.erm.hi,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub horizon: usize,
    pub initial_state: usize,
    pub cost_bound: f64,
}

impl From<&TabularMdp> for ModelSummary {
    fn from(m: &TabularMdp) -> Self {
        Self {
            num_states: m.num_states,
            num_actions: m.num_actions,
            gamma: m.gamma,
            horizon: m.horizon,
            initial_state: m.initial_state,
            cost_bound: m.cost_bound,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Metadata<C: Serialize> {
    pub schema_version: u32,
    pub command: String,
    pub crate_version: &'static str,
    pub git_revision: String,
    pub wall_time_seconds: f64,
    pub model: Option<ModelSummary>,
    pub protocol: Option<&'static str>,
    pub seed_derivation: &'static str,
    pub config: C,
}

pub const SEED_DERIVATION: &str = "ChaCha8 keyed by SHA-256(label || 0x00 || seed_le); environment label \"env\" \
keyed by seed only, planner label \"planner/<algorithm>/<beta bits>\", bootstrap seed from \
\"bootstrap/<algorithm>/<beta bits>/<n>\"";

impl<C: Serialize> Metadata<C> {
    pub fn new(command: &str, config: C, wall_time_seconds: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION"),
            git_revision: git_revision(),
            wall_time_seconds,
            model: None,
            protocol: None,
            seed_derivation: SEED_DERIVATION,
            config,
        }
    }
}

/// `git rev-parse HEAD` of the working directory, or `"unknown"`.
pub fn git_revision() -> String {
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

pub fn write_metadata<C: Serialize>(dir: &Path, meta: &Metadata<C>) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(METADATA_FILE);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes summary and metadata, plus the episodes when `episodes` is set.
/// Curves skip the episodes: their rows would repeat across budgets.
pub fn write_table_run(dir: &Path, command: &str, mdp: &TabularMdp, run: &TableRun, episodes: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    if episodes {
        write_episodes_csv(run, fs::File::create(dir.join(EPISODES_FILE))?)?;
    }
    write_summary_csv(run, fs::File::create(dir.join(SUMMARY_FILE))?)?;
    let mut meta = Metadata::new(command, &run.config, run.wall_time_seconds);
    meta.model = Some(mdp.into());
    meta.protocol = Some(crate::episode::PROTOCOL);
    write_metadata(dir, &meta)?;
    Ok(())
}
