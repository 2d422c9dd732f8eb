//! Accumulated-cost baseline.
//!
//! Every node on a rollout path receives the same sample, the full
//! discounted cost `G` of the rollout measured from the search root, and
//! tracks the mean utility `exp(beta G)` through an [`ErmAccumulator`] at the
//! root `beta` (mean utility is `exp(beta * value)`). Actions are chosen by
//! UCT on utilities min-max normalized by `[exp(-beta R0), exp(beta R0)]`,
//! where `R0` bounds `|G|` over the search horizon.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_iterations, summarize, Planner, SearchResult, SearchTree};
use crate::erm::{ErmAccumulator, RiskParam};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::sampling::sample_index;

pub const DEFAULT_EXPLORATION: f64 = std::f64::consts::SQRT_2;

/// `(exp(beta v) - exp(-beta r0)) / (exp(beta r0) - exp(-beta r0))`, evaluated
/// without overflow.
pub fn normalized_utility(v: f64, beta: f64, r0: f64) -> f64 {
    let span = 2.0 * beta * r0;
    let denom = -(-span).exp_m1();
    if span < 1.0 {
        // Small span: keep the expm1 form to avoid cancellation.
        (-span).exp() * (beta * (v + r0)).exp_m1() / denom
    } else {
        ((beta * (v - r0)).exp() - (-span).exp()) / denom
    }
}

#[derive(Debug, Clone)]
pub struct AccMcts<'m> {
    mdp: &'m TabularMdp,
    beta: RiskParam,
    exploration: f64,
    horizon: usize,
    r0: f64,
    tree: SearchTree,
    path: Vec<(u32, usize)>,
}

impl<'m> AccMcts<'m> {
    pub fn new(mdp: &'m TabularMdp, beta: RiskParam, exploration: f64) -> Result<Self> {
        mdp.validate()?;
        if !(exploration.is_finite() && exploration >= 0.0) {
            return Err(Error::Config(format!("exploration constant must be >= 0, got {exploration}")));
        }
        Ok(Self {
            mdp,
            beta,
            exploration,
            horizon: 0,
            r0: 0.0,
            tree: SearchTree::new(mdp.num_actions),
            path: Vec::new(),
        })
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    pub fn reset(&mut self, state: usize, horizon: usize) -> Result<()> {
        self.mdp.check_state(state)?;
        if horizon == 0 {
            return Err(Error::Config("search horizon must be >= 1".into()));
        }
        self.horizon = horizon;
        self.r0 = self.mdp.discounted_cost_bound(horizon);
        self.tree.reset(state, vec![self.beta; horizon]);
        Ok(())
    }

    fn select(&self, stats: &[ErmAccumulator], visits: u64) -> usize {
        if let Some(a) = stats.iter().position(|s| s.count() == 0) {
            return a;
        }
        let ln_n = (visits as f64).ln();
        let b = self.beta.get();
        let mut best = (0, f64::INFINITY);
        for (a, s) in stats.iter().enumerate() {
            let mean = normalized_utility(s.value().expect("visited"), b, self.r0);
            let score = mean - self.exploration * (ln_n / s.count() as f64).sqrt();
            if score < best.1 {
                best = (a, score);
            }
        }
        best.0
    }

    /// One rollout; returns its discounted cost from the root.
    pub fn simulate_once<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        if self.tree.is_empty() {
            return Err(Error::Config("call reset before simulating".into()));
        }
        let mdp = self.mdp;
        self.path.clear();
        let mut node = 0u32;
        let mut s = self.tree.nodes[0].state as usize;
        let mut g = 0.0;
        let mut discount = 1.0;
        for h in 0..self.horizon {
            let a = self.select(self.tree.stats_of(node), self.tree.nodes[node as usize].visits);
            self.path.push((node, a));
            g += discount * mdp.stage_cost[s][a];
            discount *= mdp.gamma;
            s = sample_index(&mdp.transition[a][s], rng);
            if h + 1 < self.horizon {
                node = self.tree.child(node, a, s);
            }
        }
        g += discount * mdp.terminal_cost[s];
        for &(node, a) in &self.path {
            self.tree.record(node, a, g);
        }
        Ok(g)
    }

    pub fn result(&self) -> Result<SearchResult> {
        summarize(&self.tree)
    }

    pub fn search_from<R: Rng + ?Sized>(
        &mut self,
        state: usize,
        horizon: usize,
        iterations: usize,
        rng: &mut R,
    ) -> Result<SearchResult> {
        check_iterations(self.mdp, iterations)?;
        self.reset(state, horizon)?;
        for _ in 0..iterations {
            self.simulate_once(rng)?;
        }
        self.result()
    }
}

impl Planner for AccMcts<'_> {
    fn plan(
        &mut self,
        state: usize,
        horizon: usize,
        iterations: usize,
        rng: &mut dyn RngCore,
    ) -> Result<SearchResult> {
        self.search_from(state, horizon, iterations, rng)
    }
}

pub fn acc_mcts_search(
    mdp: &TabularMdp,
    beta: RiskParam,
    iterations: usize,
    exploration: f64,
    seed: u64,
) -> Result<SearchResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AccMcts::new(mdp, beta, exploration)?.search_from(mdp.initial_state, mdp.horizon, iterations, &mut rng)
}
