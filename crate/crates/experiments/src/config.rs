use std::fmt;
use std::path::PathBuf;

use ermtree::mcts::DEFAULT_EXPLORATION;
use ermtree::mdp::load_mdp;
use ermtree::{Mdp4, RiskParam, TabularMdp};
use serde::{Deserialize, Serialize};

use crate::{ExpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Exact ERM backward induction, executed as a precomputed policy.
    ErmBi,
    ErmMcts,
    AccMcts,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::ErmBi, Algorithm::ErmMcts, Algorithm::AccMcts];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ErmBi => "erm-bi",
            Algorithm::ErmMcts => "erm-mcts",
            Algorithm::AccMcts => "acc-mcts",
        }
    }

    pub fn is_search(self) -> bool {
        self != Algorithm::ErmBi
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MdpSource {
    /// The four-state risky/safe benchmark.
    Mdp4 { epsilon: f64, reset_prob: f64 },
    File { path: PathBuf },
}

impl Default for MdpSource {
    fn default() -> Self {
        let d = Mdp4::default();
        MdpSource::Mdp4 { epsilon: d.epsilon, reset_prob: d.reset_prob }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mdp: MdpSource,
    pub betas: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    /// Search iterations per decision.
    pub iterations: usize,
    /// Episodes per (algorithm, beta); seeds are `0..seeds`.
    pub seeds: usize,
    /// Overrides the model's horizon. The benchmark defaults to 100.
    pub horizon: Option<usize>,
    /// Overrides the model's discount. The benchmark defaults to 0.9.
    pub gamma: Option<f64>,
    pub bootstrap_resamples: usize,
    pub level: f64,
    pub bootstrap_seed: u64,
    /// Exploration constant of the accumulated-cost baseline.
    pub exploration: f64,
    /// Bonus exponent of the practical ERM-MCTS schedule.
    pub eta: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mdp: MdpSource::default(),
            betas: vec![0.1, 0.5, 1.0],
            algorithms: Algorithm::ALL.to_vec(),
            iterations: 1000,
            seeds: 100,
            horizon: None,
            gamma: None,
            bootstrap_resamples: 10_000,
            level: 0.95,
            bootstrap_seed: 0,
            exploration: DEFAULT_EXPLORATION,
            eta: 0.5,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(ExpError::Config(m));
        if self.seeds < 1 {
            return fail("at least one seed is required".into());
        }
        if self.bootstrap_resamples < 100 {
            return fail(format!("bootstrap resamples must be >= 100, got {}", self.bootstrap_resamples));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return fail(format!("confidence level must lie in (0, 1), got {}", self.level));
        }
        if self.betas.is_empty() {
            return fail("no risk parameters given".into());
        }
        for &b in &self.betas {
            RiskParam::new(b)?;
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms given".into());
        }
        if self.iterations == 0 && self.algorithms.iter().any(|a| a.is_search()) {
            return fail("search algorithms need at least one iteration".into());
        }
        if !(self.exploration.is_finite() && self.exploration > 0.0) {
            return fail(format!("exploration constant must be finite and > 0, got {}", self.exploration));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return fail(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if self.horizon == Some(0) {
            return fail("horizon must be >= 1".into());
        }
        Ok(())
    }

    /// Builds or loads the model and applies the horizon and discount
    /// overrides.
    pub fn resolve_mdp(&self) -> Result<TabularMdp> {
        let mut mdp = match &self.mdp {
            MdpSource::Mdp4 { epsilon, reset_prob } => {
                Mdp4 { epsilon: *epsilon, reset_prob: *reset_prob, ..Mdp4::default() }.build()?
            }
            MdpSource::File { path } => load_mdp(path)?,
        };
        if let Some(h) = self.horizon {
            mdp = mdp.with_horizon(h);
        }
        if let Some(g) = self.gamma {
            mdp.gamma = g;
        }
        mdp.validate()?;
        Ok(mdp)
    }
}
