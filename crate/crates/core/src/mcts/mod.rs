//! Risk-aware Monte-Carlo tree search.
//!
//! [`ErmMcts`] keeps, at every decision node of depth `h` and for every
//! action, an [`ErmAccumulator`] at `beta_h = beta * gamma^h` over the sampled
//! discounted costs-to-go, and picks actions by the lower-confidence rule of
//! the bandit module with per-depth parameters from a [`ParameterSchedule`].
//! Each simulation descends all the way to the horizon; the node at depth
//! `H` is never materialized since only its terminal cost is needed.
//!
//! [`AccMcts`] is the accumulated-cost baseline: plain UCT on the mean of
//! `exp(beta G)`, with `G` the full discounted cost of the rollout from the
//! search root.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{lcb_argmin, BonusParams};
use crate::erm::{ErmAccumulator, RiskParam};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::sampling::sample_index;

mod acc;
mod schedule;
mod tree;

pub use acc::{acc_mcts_search, normalized_utility, AccMcts, DEFAULT_EXPLORATION};
pub use schedule::{minimal_terminal_xi, schedule_parameters, ParameterSchedule, ScheduleSpec};
pub use tree::{DecisionNode, SearchTree};

/// Outcome of one search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// ERM at the root parameter of every sampled cost at the root, pooled
    /// across actions.
    pub root_value: f64,
    pub recommended_action: usize,
    pub iterations: u64,
    pub action_visits: Vec<u64>,
    /// Per-action root estimate; `None` for unvisited actions.
    pub action_values: Vec<Option<f64>>,
}

/// A planner that can be asked for a decision from any state.
pub trait Planner {
    fn plan(
        &mut self,
        state: usize,
        horizon: usize,
        iterations: usize,
        rng: &mut dyn RngCore,
    ) -> Result<SearchResult>;
}

/// The action a decision node would take next.
pub fn select_action(node: &DecisionNode<'_>, schedule: &ParameterSchedule) -> Result<usize> {
    let params = schedule.bonus_params(node.depth() + 1)?;
    let stats: Vec<ErmAccumulator> = (0..node.num_actions()).map(|a| *node.accumulator(a)).collect();
    lcb_argmin(&stats, node.visits(), &params).ok_or(Error::EmptyEstimator)
}

pub(crate) fn summarize(tree: &SearchTree) -> Result<SearchResult> {
    let root = tree.root().ok_or_else(|| Error::Config("search has not been started".into()))?;
    let a_count = root.num_actions();
    let mut pooled = ErmAccumulator::new(root.accumulator(0).beta());
    for a in 0..a_count {
        pooled.merge(root.accumulator(a))?;
    }
    let action_visits: Vec<u64> = (0..a_count).map(|a| root.action_visits(a)).collect();
    let action_values: Vec<Option<f64>> = (0..a_count).map(|a| root.action_value(a)).collect();
    // Lowest estimate, then most visits, then lowest index.
    let mut best: Option<(usize, f64, u64)> = None;
    for a in 0..a_count {
        if let Some(v) = action_values[a] {
            let better = match best {
                None => true,
                Some((_, bv, bn)) => v < bv || (v == bv && action_visits[a] > bn),
            };
            if better {
                best = Some((a, v, action_visits[a]));
            }
        }
    }
    let (recommended_action, _, _) = best.ok_or(Error::EmptyEstimator)?;
    Ok(SearchResult {
        root_value: pooled.value()?,
        recommended_action,
        iterations: root.visits(),
        action_visits,
        action_values,
    })
}

pub(crate) fn check_iterations(mdp: &TabularMdp, n: usize) -> Result<()> {
    if n < mdp.num_actions {
        return Err(Error::Config(format!(
            "{n} iterations cannot try each of the {} root actions once",
            mdp.num_actions
        )));
    }
    Ok(())
}

/// ERM-MCTS planner; the tree is reused across searches.
#[derive(Debug, Clone)]
pub struct ErmMcts<'m> {
    mdp: &'m TabularMdp,
    beta: RiskParam,
    spec: ScheduleSpec,
    horizon: usize,
    params: Vec<BonusParams>,
    tree: SearchTree,
    path: Vec<(u32, usize, f64)>,
}

impl<'m> ErmMcts<'m> {
    pub fn new(mdp: &'m TabularMdp, beta: RiskParam, spec: ScheduleSpec) -> Result<Self> {
        mdp.validate()?;
        Ok(Self {
            mdp,
            beta,
            spec,
            horizon: 0,
            params: Vec::new(),
            tree: SearchTree::new(mdp.num_actions),
            path: Vec::new(),
        })
    }

    pub fn with_schedule(mdp: &'m TabularMdp, beta: RiskParam, schedule: &ParameterSchedule) -> Result<Self> {
        if let Some(h) = schedule.horizon() {
            if h != mdp.horizon {
                return Err(Error::Config(format!(
                    "schedule covers {h} depths but the MDP horizon is {}",
                    mdp.horizon
                )));
            }
        }
        Self::new(mdp, beta, schedule.into())
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    /// Discards the tree and starts a new one at `state`.
    pub fn reset(&mut self, state: usize, horizon: usize) -> Result<()> {
        self.mdp.check_state(state)?;
        if horizon == 0 {
            return Err(Error::Config("search horizon must be >= 1".into()));
        }
        if horizon != self.horizon || self.params.is_empty() {
            self.params = self.spec.build(horizon)?.bonus_table(horizon)?;
            self.horizon = horizon;
        }
        let betas = (0..horizon).map(|h| self.beta.depth_adjusted(self.mdp.gamma, h)).collect();
        self.tree.reset(state, betas);
        self.path.clear();
        Ok(())
    }

    /// One descent from the root to the horizon and the backup along it.
    /// Returns the sampled discounted cost from the root.
    pub fn simulate_once<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        if self.tree.is_empty() {
            return Err(Error::Config("call reset before simulating".into()));
        }
        let mdp = self.mdp;
        self.path.clear();
        let mut node = 0u32;
        let mut s = self.tree.nodes[0].state as usize;
        for h in 0..self.horizon {
            let t = self.tree.nodes[node as usize].visits;
            let a = lcb_argmin(self.tree.stats_of(node), t, &self.params[h])
                .expect("visited actions always have a value");
            self.path.push((node, a, mdp.stage_cost[s][a]));
            s = sample_index(&mdp.transition[a][s], rng);
            if h + 1 < self.horizon {
                node = self.tree.child(node, a, s);
            }
        }
        let mut x = mdp.terminal_cost[s];
        for &(node, a, c) in self.path.iter().rev() {
            x = c + mdp.gamma * x;
            self.tree.record(node, a, x);
        }
        Ok(x)
    }

    /// Root action of the most recent simulation.
    pub fn last_root_action(&self) -> Option<usize> {
        self.path.first().map(|&(_, a, _)| a)
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

impl Planner for ErmMcts<'_> {
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

/// `n` simulations from `s_0` over the MDP's horizon, seeded by `seed`.
pub fn search(
    mdp: &TabularMdp,
    beta: RiskParam,
    schedule: &ParameterSchedule,
    iterations: usize,
    seed: u64,
) -> Result<SearchResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ErmMcts::with_schedule(mdp, beta, schedule)?.search_from(mdp.initial_state, mdp.horizon, iterations, &mut rng)
}
