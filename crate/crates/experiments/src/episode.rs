//! Plan-then-execute episodes.
//!
//! At step `k` of an `H`-step episode the controller picks an action for the
//! current state: a precomputed policy reads `pi_k(s)`, a search planner runs
//! a fresh search of `n` iterations with horizon `H - k` and plays its
//! recommendation. The risk parameter is not re-discounted for elapsed time;
//! only the per-depth adjustment inside each search applies. The episode cost
//! is `sum_k gamma^k c(s_k, a_k) + gamma^H c_H(s_H)`.

use ermtree::dp::Policy;
use ermtree::mcts::{AccMcts, ErmMcts, Planner, ScheduleSpec};
use ermtree::{RiskParam, TabularMdp};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Algorithm, ExperimentConfig};
use crate::seeds::{environment_stream, planner_stream};
use crate::Result;

pub const PROTOCOL: &str = "plan-then-execute: fresh search of n iterations from the current state with \
horizon H-k at step k, execute the recommended action; the exact policy executes pi_k(s); \
beta is not re-discounted for elapsed time";

pub enum Controller<'m> {
    Policy(&'m Policy),
    Search { planner: Box<dyn Planner + 'm>, iterations: usize, rng: Box<ChaCha8Rng> },
}

impl<'m> Controller<'m> {
    /// The controller `algorithm` uses for episode `seed`. `policy` must be
    /// given for the exact algorithm.
    pub fn for_algorithm(
        mdp: &'m TabularMdp,
        algorithm: Algorithm,
        beta: f64,
        seed: u64,
        config: &ExperimentConfig,
        iterations: usize,
        policy: Option<&'m Policy>,
    ) -> Result<Self> {
        let b = RiskParam::new(beta)?;
        let planner: Box<dyn Planner + 'm> = match algorithm {
            Algorithm::ErmBi => {
                let policy = policy.ok_or_else(|| crate::ExpError::Config("exact policy missing".into()))?;
                return Ok(Controller::Policy(policy));
            }
            Algorithm::ErmMcts => Box::new(ErmMcts::new(mdp, b, ScheduleSpec::Practical { eta: config.eta })?),
            Algorithm::AccMcts => Box::new(AccMcts::new(mdp, b, config.exploration)?),
        };
        Ok(Controller::Search { planner, iterations, rng: Box::new(planner_stream(algorithm, beta, seed)) })
    }

    fn act(&mut self, mdp: &TabularMdp, step: usize, state: usize) -> Result<usize> {
        match self {
            Controller::Policy(p) => Ok(p.action(step, state)),
            Controller::Search { planner, iterations, rng } => {
                Ok(planner.plan(state, mdp.horizon - step, *iterations, rng.as_mut())?.recommended_action)
            }
        }
    }
}

/// Discounted cost of one episode from the initial state.
pub fn run_episode<R: Rng + ?Sized>(mdp: &TabularMdp, controller: &mut Controller<'_>, env: &mut R) -> Result<f64> {
    let mut state = mdp.initial_state;
    let mut total = 0.0;
    let mut discount = 1.0;
    for step in 0..mdp.horizon {
        let action = controller.act(mdp, step, state)?;
        let t = mdp.sample_transition(state, action, env)?;
        total += discount * t.cost;
        discount *= mdp.gamma;
        state = t.next_state;
    }
    Ok(total + discount * mdp.terminal_cost[state])
}

/// Episode `seed` of `algorithm` on the shared environment stream.
pub fn episode_cost(
    mdp: &TabularMdp,
    algorithm: Algorithm,
    beta: f64,
    seed: u64,
    config: &ExperimentConfig,
    iterations: usize,
    policy: Option<&Policy>,
) -> Result<f64> {
    let mut controller = Controller::for_algorithm(mdp, algorithm, beta, seed, config, iterations, policy)?;
    run_episode(mdp, &mut controller, &mut environment_stream(seed))
}
