//! Algorithm comparisons on one model: fixed-budget tables and
//! budget-sweep curves.

use std::collections::BTreeMap;
use std::time::Instant;

use ermtree::dp::{erm_backward_induction, Policy};
use ermtree::{RiskParam, TabularMdp};
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::episode::episode_cost;
use crate::seeds::seed_stream;
use crate::stats::{bootstrap_erm_ci, ErmInterval};
use crate::Result;

/// Per-seed episode costs of one (algorithm, beta, budget) cell and the ERM
/// of their empirical distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub algorithm: Algorithm,
    pub beta: f64,
    /// Search iterations per decision; 0 for the exact policy.
    pub iterations: usize,
    /// Indexed by seed.
    pub costs: Vec<f64>,
    pub erm: ErmInterval,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRun {
    pub config: ExperimentConfig,
    /// Sorted by algorithm, beta, iterations.
    pub results: Vec<ExperimentResult>,
    pub wall_time_seconds: f64,
}

impl TableRun {
    pub fn get(&self, algorithm: Algorithm, beta: f64) -> Option<&ExperimentResult> {
        self.results.iter().find(|r| r.algorithm == algorithm && r.beta == beta)
    }
}

/// Every configured algorithm at every beta with `config.iterations`
/// iterations per decision.
pub fn run_table1(config: &ExperimentConfig) -> Result<TableRun> {
    config.validate()?;
    let mdp = config.resolve_mdp()?;
    run_table1_on(&mdp, config)
}

pub fn run_table1_on(mdp: &TabularMdp, config: &ExperimentConfig) -> Result<TableRun> {
    run_grid(mdp, config, &[config.iterations])
}

/// As [`run_table1`] for every budget in `grid`. The exact policy does not
/// depend on the budget; its row is repeated at each budget.
pub fn run_convergence_curve(config: &ExperimentConfig, grid: &[usize]) -> Result<TableRun> {
    config.validate()?;
    let mdp = config.resolve_mdp()?;
    run_convergence_curve_on(&mdp, config, grid)
}

pub fn run_convergence_curve_on(mdp: &TabularMdp, config: &ExperimentConfig, grid: &[usize]) -> Result<TableRun> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(crate::ExpError::Config("iteration grid must be non-empty and positive".into()));
    }
    run_grid(mdp, config, grid)
}

fn run_grid(mdp: &TabularMdp, config: &ExperimentConfig, grid: &[usize]) -> Result<TableRun> {
    config.validate()?;
    mdp.validate()?;
    let start = Instant::now();
    let mut betas = config.betas.clone();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let mut algorithms = config.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();

    let mut policies: BTreeMap<u64, Policy> = BTreeMap::new();
    if algorithms.contains(&Algorithm::ErmBi) {
        for &b in &betas {
            policies.insert(b.to_bits(), erm_backward_induction(mdp, RiskParam::new(b)?)?.1);
        }
    }

    // (algorithm, beta, iterations) cells; the exact policy runs once.
    let mut cells = Vec::new();
    for &algo in &algorithms {
        for &b in &betas {
            if algo.is_search() {
                cells.extend(grid.iter().map(|&n| (algo, b, n)));
            } else {
                cells.push((algo, b, 0));
            }
        }
    }
    let jobs: Vec<(usize, u64)> =
        (0..cells.len()).flat_map(|c| (0..config.seeds as u64).map(move |s| (c, s))).collect();
    let costs: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let (algo, b, n) = cells[c];
            episode_cost(mdp, algo, b, seed, config, n, policies.get(&b.to_bits()))
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::new();
    for (c, &(algo, b, n)) in cells.iter().enumerate() {
        let cell_costs = costs[c * config.seeds..(c + 1) * config.seeds].to_vec();
        let erm = cell_interval(&cell_costs, algo, b, n, config)?;
        if algo.is_search() {
            results.push(ExperimentResult { algorithm: algo, beta: b, iterations: n, costs: cell_costs, erm });
        } else {
            for &n in grid {
                let costs = cell_costs.clone();
                results.push(ExperimentResult { algorithm: algo, beta: b, iterations: n, costs, erm });
            }
        }
    }
    results.sort_by(|x, y| {
        (x.algorithm, x.iterations).cmp(&(y.algorithm, y.iterations)).then(x.beta.total_cmp(&y.beta))
    });
    Ok(TableRun { config: config.clone(), results, wall_time_seconds: start.elapsed().as_secs_f64() })
}

fn cell_interval(costs: &[f64], algo: Algorithm, beta: f64, n: usize, config: &ExperimentConfig) -> Result<ErmInterval> {
    let label = format!("bootstrap/{}/{:016x}/{n}", algo.name(), beta.to_bits());
    let seed = seed_stream(&label, config.bootstrap_seed).next_u64();
    let b = RiskParam::new(beta)?;
    if costs.len() < 2 {
        // A single episode has no sampling distribution to resample.
        let point = ermtree::erm_of_samples(costs, b)?;
        return Ok(ErmInterval { point, lo: point, hi: point });
    }
    bootstrap_erm_ci(costs, b, config.bootstrap_resamples, config.level, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ermtree::Mdp4;

    fn small(seeds: usize) -> ExperimentConfig {
        ExperimentConfig {
            betas: vec![1.0, 0.5],
            iterations: 30,
            seeds,
            horizon: Some(6),
            bootstrap_resamples: 200,
            ..Default::default()
        }
    }

    #[test]
    fn table_shape_and_order() {
        let run = run_table1(&small(4)).unwrap();
        let keys: Vec<(Algorithm, f64)> = run.results.iter().map(|r| (r.algorithm, r.beta)).collect();
        assert_eq!(
            keys,
            vec![
                (Algorithm::ErmBi, 0.5),
                (Algorithm::ErmBi, 1.0),
                (Algorithm::ErmMcts, 0.5),
                (Algorithm::ErmMcts, 1.0),
                (Algorithm::AccMcts, 0.5),
                (Algorithm::AccMcts, 1.0),
            ]
        );
        for r in &run.results {
            assert_eq!(r.costs.len(), 4);
            assert!(r.erm.lo <= r.erm.point && r.erm.point <= r.erm.hi);
            let direct = ermtree::erm_of_samples(&r.costs, RiskParam::new(r.beta).unwrap()).unwrap();
            assert_eq!(r.erm.point, direct);
        }
    }

    #[test]
    fn exact_row_is_the_policy_trajectories() {
        let cfg = small(5);
        let run = run_table1(&cfg).unwrap();
        let mdp = cfg.resolve_mdp().unwrap();
        let (_, pi) = erm_backward_induction(&mdp, RiskParam::new(0.5).unwrap()).unwrap();
        let expect: Vec<f64> = (0..5)
            .map(|s| episode_cost(&mdp, Algorithm::ErmBi, 0.5, s, &cfg, 0, Some(&pi)).unwrap())
            .collect();
        assert_eq!(run.get(Algorithm::ErmBi, 0.5).unwrap().costs, expect);
    }

    #[test]
    fn repeated_runs_agree() {
        let a = run_table1(&small(3)).unwrap();
        let b = run_table1(&small(3)).unwrap();
        assert_eq!(a.results, b.results);
    }

    #[test]
    fn adding_an_algorithm_keeps_other_cells() {
        let only = ExperimentConfig { algorithms: vec![Algorithm::ErmMcts], ..small(3) };
        let a = run_table1(&only).unwrap();
        let b = run_table1(&small(3)).unwrap();
        assert_eq!(a.get(Algorithm::ErmMcts, 1.0).unwrap().costs, b.get(Algorithm::ErmMcts, 1.0).unwrap().costs);
    }

    #[test]
    fn single_action_curve_is_flat_at_exact_value() {
        let mut mdp = Mdp4::default().build().unwrap().with_horizon(5);
        mdp.num_actions = 1;
        mdp.transition.truncate(1);
        for row in mdp.stage_cost.iter_mut() {
            row.truncate(1);
        }
        // From s0 the only action leads to s2 surely and no reset occurs.
        mdp.transition[0] = vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
        let cfg = ExperimentConfig { seeds: 3, bootstrap_resamples: 100, ..Default::default() };
        let run = run_convergence_curve_on(&mdp, &cfg, &[1, 10, 100]).unwrap();
        let exact: f64 = (1..=5).map(|k| 0.9f64.powi(k)).sum();
        for r in &run.results {
            assert!((r.erm.point - exact).abs() < 1e-12, "{r:?}");
            assert_eq!(r.erm.lo, r.erm.hi);
        }
        assert_eq!(run.results.len(), 3 * 3 * 3);
    }
}
