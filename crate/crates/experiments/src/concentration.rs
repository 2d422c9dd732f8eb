//! Empirical concentration checks on a stationary two-armed bandit.
//!
//! For `M` independent runs of the ERM bandit the suite records the pooled
//! stream estimate `rho_n` (the ERM of all costs paid so far) at each budget
//! in a grid. It reports
//! * the mean of `|rho_n - mu*|` per budget and its log-log slope, and
//! * tail frequencies `P[n rho_n - n mu* >= n^eta' z]` at the largest budget,
//!   each with a one-sided Clopper-Pearson upper bound.

use ermtree::bandit::{run_bandit_with, BanditEnv, Bernoulli, BonusParams, CostSource, TieBreak};
use ermtree::{ErmAccumulator, RiskParam};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seeds::seed_stream;
use crate::stats::{clopper_pearson_upper, log_log_slope};
use crate::{ExpError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub beta: f64,
    /// Success probabilities of Bernoulli arms with costs in `{0, 1}`.
    pub arm_probs: Vec<f64>,
    pub runs: usize,
    /// Budgets, increasing; tails are measured at the last one.
    pub grid: Vec<usize>,
    pub z: Vec<f64>,
    pub eta_prime: f64,
    /// Confidence of the binomial upper bounds.
    pub confidence: f64,
    /// Largest acceptable upper bound for a tail with no exceedances; fixes
    /// the minimum number of runs.
    pub resolution: f64,
    /// Bonus exponent of the practical schedule.
    pub eta: f64,
    pub seed: u64,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            arm_probs: vec![0.1, 0.9],
            runs: 2000,
            grid: vec![100, 1_000, 10_000],
            z: vec![2.0, 4.0, 8.0],
            eta_prime: 0.5,
            confidence: 0.99,
            resolution: 0.05,
            eta: 0.5,
            seed: 0,
        }
    }
}

impl ConcentrationConfig {
    /// Smallest `M` whose zero-exceedance upper bound `1 - (1 - conf)^(1/M)`
    /// is at most the resolution.
    pub fn min_runs(&self) -> usize {
        ((1.0 - self.confidence).ln() / (1.0 - self.resolution).ln()).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(ExpError::Config(m));
        RiskParam::new(self.beta)?;
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return fail(format!("confidence must lie in (0, 1), got {}", self.confidence));
        }
        if !(self.resolution > 0.0 && self.resolution < 1.0) {
            return fail(format!("resolution must lie in (0, 1), got {}", self.resolution));
        }
        if self.runs < self.min_runs() {
            return fail(format!(
                "{} runs cannot bound a tail below {} at {} confidence; need at least {}",
                self.runs,
                self.resolution,
                self.confidence,
                self.min_runs()
            ));
        }
        if self.grid.is_empty() || self.grid.windows(2).any(|w| w[0] >= w[1]) || self.grid[0] == 0 {
            return fail("budget grid must be positive and strictly increasing".into());
        }
        if self.arm_probs.is_empty() || self.arm_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return fail("arm probabilities must lie in [0, 1]".into());
        }
        if self.z.iter().any(|z| !z.is_finite()) {
            return fail("tail thresholds must be finite".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return fail(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub z: f64,
    pub exceedances: u64,
    pub runs: u64,
    pub frequency: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub mu_star: f64,
    pub grid: Vec<usize>,
    pub mean_abs_error: Vec<f64>,
    /// `None` when fewer than two budgets or a zero error make the fit
    /// undefined.
    pub slope: Option<f64>,
    pub tail_budget: usize,
    pub tails: Vec<TailEstimate>,
}

impl ConcentrationReport {
    pub fn tails_non_increasing(&self) -> bool {
        let mut sorted = self.tails.clone();
        sorted.sort_by(|a, b| a.z.total_cmp(&b.z));
        sorted.windows(2).all(|w| w[1].frequency <= w[0].frequency)
    }

    pub fn tails_below_one(&self) -> bool {
        self.tails.iter().all(|t| t.upper < 1.0)
    }
}

/// The suite on Bernoulli arms from the configuration.
pub fn run_concentration_suite(config: &ConcentrationConfig) -> Result<ConcentrationReport> {
    config.validate()?;
    let beta = RiskParam::new(config.beta)?;
    let arms: Vec<Bernoulli> = config.arm_probs.iter().map(|&p| Bernoulli { p, low: 0.0, high: 1.0 }).collect();
    let mu_star = arms.iter().map(|a| a.erm(beta)).fold(f64::INFINITY, f64::min);
    let env = BanditEnv::plain(arms.into_iter().map(|a| Box::new(a) as Box<dyn CostSource>).collect(), 1.0)?;
    run_concentration_with(&env, mu_star, config)
}

/// The suite on an arbitrary bandit whose optimal arm value is `mu_star`.
pub fn run_concentration_with(env: &BanditEnv, mu_star: f64, config: &ConcentrationConfig) -> Result<ConcentrationReport> {
    config.validate()?;
    let beta = RiskParam::new(config.beta)?;
    let params = BonusParams::practical(config.eta)?;
    let n_max = *config.grid.last().expect("validated");
    if n_max < env.num_arms() {
        return Err(ExpError::Config(format!("budget {n_max} is below the number of arms")));
    }
    let label = format!("concentration/{}", config.seed);
    let per_run: Vec<Vec<f64>> = (0..config.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = seed_stream(&label, run);
            let h = run_bandit_with(env, beta, &params, n_max, &mut rng, TieBreak::LowestIndex)?;
            let mut acc = ErmAccumulator::new(beta);
            let mut out = Vec::with_capacity(config.grid.len());
            let mut next = 0;
            for (i, step) in h.steps.iter().enumerate() {
                acc.update(step.cost)?;
                if i + 1 == config.grid[next] {
                    out.push(acc.value()?);
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let m = config.runs as f64;
    let mean_abs_error: Vec<f64> = (0..config.grid.len())
        .map(|g| per_run.iter().map(|r| (r[g] - mu_star).abs()).sum::<f64>() / m)
        .collect();
    let slope = (config.grid.len() >= 2 && mean_abs_error.iter().all(|&e| e > 0.0)).then(|| {
        let xs: Vec<f64> = config.grid.iter().map(|&n| n as f64).collect();
        log_log_slope(&xs, &mean_abs_error)
    });

    let n = n_max as f64;
    let tails = config
        .z
        .iter()
        .map(|&z| {
            let threshold = n.powf(config.eta_prime) * z;
            let exceedances =
                per_run.iter().filter(|r| n * r[r.len() - 1] - n * mu_star >= threshold).count() as u64;
            TailEstimate {
                z,
                exceedances,
                runs: config.runs as u64,
                frequency: exceedances as f64 / m,
                upper: clopper_pearson_upper(exceedances, config.runs as u64, config.confidence),
            }
        })
        .collect();
    Ok(ConcentrationReport { mu_star, grid: config.grid.clone(), mean_abs_error, slope, tail_budget: n_max, tails })
}
