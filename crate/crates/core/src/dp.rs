//! Exact ERM solvers: backward induction over the ERM Bellman optimality
//! equations, and brute-force trajectory enumeration for small instances.
//!
//! With `beta_h = beta * gamma^h`,
//!
//! ```text
//! V_H(s) = c_H(s)
//! V_h(s) = min_a ERM_{beta_h}( c(s, a) + gamma V_{h+1}(S') ),   S' ~ P^a(s, .)
//! ```
//!
//! and `V_0(s_0)` equals the optimal `ERM_beta` of the full discounted cost.

use serde::{Deserialize, Serialize};

use crate::erm::{erm_weighted, RiskParam};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// `values[h][s]` for `h` in `0..=H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub values: Vec<Vec<f64>>,
}

impl ValueFunction {
    pub fn value(&self, depth: usize, state: usize) -> f64 {
        self.values[depth][state]
    }
}

/// `actions[h][s]` for `h` in `0..H`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub actions: Vec<Vec<usize>>,
}

impl Policy {
    pub fn action(&self, depth: usize, state: usize) -> usize {
        self.actions[depth][state]
    }

    /// Time-invariant policy over `horizon` steps.
    pub fn stationary(actions: Vec<usize>, horizon: usize) -> Self {
        Self { actions: vec![actions; horizon] }
    }

    fn check(&self, mdp: &TabularMdp) -> Result<()> {
        if self.actions.len() != mdp.horizon {
            return Err(Error::Config(format!(
                "policy covers {} depths, MDP horizon is {}",
                self.actions.len(),
                mdp.horizon
            )));
        }
        for row in &self.actions {
            if row.len() != mdp.num_states {
                return Err(Error::Config(format!(
                    "policy row has {} states, expected {}",
                    row.len(),
                    mdp.num_states
                )));
            }
            for &a in row {
                mdp.check_action(a)?;
            }
        }
        Ok(())
    }
}

/// `Q_h(s, a) = ERM_{beta gamma^h}(c(s, a) + gamma next[S'])`.
pub fn q_value(mdp: &TabularMdp, beta: RiskParam, depth: usize, s: usize, a: usize, next: &[f64]) -> f64 {
    let b = beta.depth_adjusted(mdp.gamma, depth).get();
    let c = mdp.stage_cost[s][a];
    let row = &mdp.transition[a][s];
    c + erm_weighted(
        row.iter().zip(next).map(|(&p, &v)| (mdp.gamma * v, p)),
        b,
    )
}

/// `Q_h(s, .)` for every state and action at `depth`, from the value table.
pub fn q_values(mdp: &TabularMdp, beta: RiskParam, values: &ValueFunction, depth: usize) -> Vec<Vec<f64>> {
    let next = &values.values[depth + 1];
    (0..mdp.num_states)
        .map(|s| (0..mdp.num_actions).map(|a| q_value(mdp, beta, depth, s, a, next)).collect())
        .collect()
}

/// Optimal values and a greedy policy; ties go to the lowest action index.
pub fn erm_backward_induction(mdp: &TabularMdp, beta: RiskParam) -> Result<(ValueFunction, Policy)> {
    mdp.validate()?;
    let h_max = mdp.horizon;
    let mut values = vec![Vec::new(); h_max + 1];
    let mut actions = vec![Vec::new(); h_max];
    values[h_max] = mdp.terminal_cost.clone();
    for h in (0..h_max).rev() {
        let mut v = Vec::with_capacity(mdp.num_states);
        let mut pi = Vec::with_capacity(mdp.num_states);
        for s in 0..mdp.num_states {
            let mut best = (0, f64::INFINITY);
            for a in 0..mdp.num_actions {
                let q = q_value(mdp, beta, h, s, a, &values[h + 1]);
                if q < best.1 {
                    best = (a, q);
                }
            }
            pi.push(best.0);
            v.push(best.1);
        }
        values[h] = v;
        actions[h] = pi;
    }
    Ok((ValueFunction { values }, Policy { actions }))
}

/// ERM of a fixed policy via the same recursion without the minimum.
pub fn evaluate_policy(mdp: &TabularMdp, policy: &Policy, beta: RiskParam) -> Result<ValueFunction> {
    mdp.validate()?;
    policy.check(mdp)?;
    let h_max = mdp.horizon;
    let mut values = vec![Vec::new(); h_max + 1];
    values[h_max] = mdp.terminal_cost.clone();
    for h in (0..h_max).rev() {
        values[h] = (0..mdp.num_states)
            .map(|s| q_value(mdp, beta, h, s, policy.action(h, s), &values[h + 1]))
            .collect();
    }
    Ok(ValueFunction { values })
}

/// Limits for the enumeration oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    /// Maximum number of (probability, cost) trajectory terms per policy.
    pub max_terms: u64,
    /// Maximum number of deterministic Markov policies.
    pub max_policies: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self { max_terms: 1_000_000, max_policies: 100_000 }
    }
}

/// Every positive-probability trajectory from `s_0` under `policy`, as
/// `(discounted cost, probability)`.
pub fn trajectory_distribution(
    mdp: &TabularMdp,
    policy: &Policy,
    budget: &EnumerationBudget,
) -> Result<Vec<(f64, f64)>> {
    mdp.validate()?;
    policy.check(mdp)?;
    let mut out = Vec::new();
    // (state, depth, probability so far, discounted cost so far, gamma^depth)
    let mut stack = vec![(mdp.initial_state, 0usize, 1.0f64, 0.0f64, 1.0f64)];
    while let Some((s, h, prob, cost, disc)) = stack.pop() {
        if h == mdp.horizon {
            if out.len() as u64 >= budget.max_terms {
                return Err(Error::BudgetExceeded { what: "trajectory terms", limit: budget.max_terms });
            }
            out.push((cost + disc * mdp.terminal_cost[s], prob));
            continue;
        }
        let a = policy.action(h, s);
        let c = cost + disc * mdp.stage_cost[s][a];
        for (t, &p) in mdp.transition[a][s].iter().enumerate() {
            if p > 0.0 {
                stack.push((t, h + 1, prob * p, c, disc * mdp.gamma));
            }
        }
    }
    Ok(out)
}

/// Exact `ERM_beta` of the discounted cost under `policy`, by enumeration.
pub fn brute_force_policy_erm(
    mdp: &TabularMdp,
    policy: &Policy,
    beta: RiskParam,
    budget: &EnumerationBudget,
) -> Result<f64> {
    let dist = trajectory_distribution(mdp, policy, budget)?;
    Ok(erm_weighted(dist.iter().copied(), beta.get()))
}

/// Minimum of [`brute_force_policy_erm`] over all `A^(S H)` deterministic
/// Markov policies.
pub fn brute_force_optimal_erm(mdp: &TabularMdp, beta: RiskParam, budget: &EnumerationBudget) -> Result<f64> {
    mdp.validate()?;
    let slots = mdp.num_states * mdp.horizon;
    let too_many = Error::BudgetExceeded { what: "policies", limit: budget.max_policies };
    let count = u32::try_from(slots)
        .ok()
        .and_then(|e| (mdp.num_actions as u64).checked_pow(e))
        .filter(|&c| c <= budget.max_policies)
        .ok_or(too_many)?;

    let mut digits = vec![0usize; slots];
    let mut best = f64::INFINITY;
    for _ in 0..count {
        let policy = Policy {
            actions: digits.chunks(mdp.num_states).map(<[usize]>::to_vec).collect(),
        };
        best = best.min(brute_force_policy_erm(mdp, &policy, beta, budget)?);
        // Odometer increment in base A.
        for d in digits.iter_mut() {
            *d += 1;
            if *d < mdp.num_actions {
                break;
            }
            *d = 0;
        }
    }
    Ok(best)
}
