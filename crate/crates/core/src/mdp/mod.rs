//! Tabular finite-horizon discounted MDPs.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::sample_index;

mod format;

pub use format::{load_mdp, parse_mdp, save_mdp, write_mdp, FORMAT_HEADER};

/// Row sums of every transition matrix must be within this of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A finite-horizon discounted MDP with stationary stage costs.
///
/// `transition[a][s][s']` is `P^a(s, s')`, `stage_cost[s][a]` is `c(s, a)`
/// charged at every depth `h < horizon`, and `terminal_cost[s]` is charged at
/// depth `horizon`. Fields are public so that malformed instances can be
/// represented and reported by [`TabularMdp::validate`]; every consumer in
/// this crate validates before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub stage_cost: Vec<Vec<f64>>,
    pub terminal_cost: Vec<f64>,
    pub gamma: f64,
    pub horizon: usize,
    pub initial_state: usize,
    pub cost_bound: f64,
}

/// One broken invariant, with its location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MdpViolation {
    Shape(String),
    NonFinite { location: String, value: f64 },
    NegativeProbability { action: usize, state: usize, next_state: usize, value: f64 },
    RowSum { action: usize, state: usize, sum: f64 },
    CostBound { location: String, value: f64, bound: f64 },
    Gamma(f64),
    Horizon(usize),
    InitialState { state: usize, num_states: usize },
    CostBoundParam(f64),
}

impl fmt::Display for MdpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MdpViolation::Shape(msg) => write!(f, "shape: {msg}"),
            MdpViolation::NonFinite { location, value } => {
                write!(f, "{location}: non-finite value {value}")
            }
            MdpViolation::NegativeProbability { action, state, next_state, value } => write!(
                f,
                "P(a={action}, s={state}, s'={next_state}) = {value} is negative"
            ),
            MdpViolation::RowSum { action, state, sum } => {
                write!(f, "transition row (a={action}, s={state}) sums to {sum}, expected 1")
            }
            MdpViolation::CostBound { location, value, bound } => {
                write!(f, "{location} = {value} exceeds cost bound {bound}")
            }
            MdpViolation::Gamma(g) => write!(f, "gamma {g} outside (0, 1]"),
            MdpViolation::Horizon(h) => write!(f, "horizon {h} must be >= 1"),
            MdpViolation::InitialState { state, num_states } => {
                write!(f, "initial state {state} out of range for {num_states} states")
            }
            MdpViolation::CostBoundParam(r) => write!(f, "cost bound {r} must be finite and > 0"),
        }
    }
}

/// A generative-model sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub next_state: usize,
    pub cost: f64,
}

impl TabularMdp {
    /// Every violated invariant, in a fixed order. Never panics, even on
    /// ragged tables.
    pub fn violations(&self) -> Vec<MdpViolation> {
        let mut out = Vec::new();
        let (ns, na) = (self.num_states, self.num_actions);
        if ns == 0 {
            out.push(MdpViolation::Shape("num_states must be >= 1".into()));
        }
        if na == 0 {
            out.push(MdpViolation::Shape("num_actions must be >= 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            out.push(MdpViolation::Gamma(self.gamma));
        }
        if self.horizon == 0 {
            out.push(MdpViolation::Horizon(self.horizon));
        }
        if self.initial_state >= ns {
            out.push(MdpViolation::InitialState { state: self.initial_state, num_states: ns });
        }
        let bound_ok = self.cost_bound.is_finite() && self.cost_bound > 0.0;
        if !bound_ok {
            out.push(MdpViolation::CostBoundParam(self.cost_bound));
        }

        if self.transition.len() != na {
            out.push(MdpViolation::Shape(format!(
                "transition has {} action matrices, expected {na}",
                self.transition.len()
            )));
        }
        for (a, matrix) in self.transition.iter().enumerate() {
            if matrix.len() != ns {
                out.push(MdpViolation::Shape(format!(
                    "transition[{a}] has {} rows, expected {ns}",
                    matrix.len()
                )));
            }
            for (s, row) in matrix.iter().enumerate() {
                if row.len() != ns {
                    out.push(MdpViolation::Shape(format!(
                        "transition[{a}][{s}] has {} entries, expected {ns}",
                        row.len()
                    )));
                    continue;
                }
                let mut sum = 0.0;
                let mut finite = true;
                for (t, &p) in row.iter().enumerate() {
                    if !p.is_finite() {
                        finite = false;
                        out.push(MdpViolation::NonFinite {
                            location: format!("P(a={a}, s={s}, s'={t})"),
                            value: p,
                        });
                    } else if p < 0.0 {
                        out.push(MdpViolation::NegativeProbability {
                            action: a,
                            state: s,
                            next_state: t,
                            value: p,
                        });
                    }
                    sum += p;
                }
                if finite && (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(MdpViolation::RowSum { action: a, state: s, sum });
                }
            }
        }

        let check_cost = |location: String, c: f64, out: &mut Vec<MdpViolation>| {
            if !c.is_finite() {
                out.push(MdpViolation::NonFinite { location, value: c });
            } else if bound_ok && c.abs() > self.cost_bound {
                out.push(MdpViolation::CostBound { location, value: c, bound: self.cost_bound });
            }
        };
        if self.stage_cost.len() != ns {
            out.push(MdpViolation::Shape(format!(
                "stage_cost has {} rows, expected {ns}",
                self.stage_cost.len()
            )));
        }
        for (s, row) in self.stage_cost.iter().enumerate() {
            if row.len() != na {
                out.push(MdpViolation::Shape(format!(
                    "stage_cost[{s}] has {} entries, expected {na}",
                    row.len()
                )));
            }
            for (a, &c) in row.iter().enumerate() {
                check_cost(format!("c(s={s}, a={a})"), c, &mut out);
            }
        }
        if self.terminal_cost.len() != ns {
            out.push(MdpViolation::Shape(format!(
                "terminal_cost has {} entries, expected {ns}",
                self.terminal_cost.len()
            )));
        }
        for (s, &c) in self.terminal_cost.iter().enumerate() {
            check_cost(format!("c_H(s={s})"), c, &mut out);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMdp(v))
        }
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s < self.num_states {
            Ok(())
        } else {
            Err(Error::OutOfRange { what: "state", index: s, size: self.num_states })
        }
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        if a < self.num_actions {
            Ok(())
        } else {
            Err(Error::OutOfRange { what: "action", index: a, size: self.num_actions })
        }
    }

    /// Draws `s' ~ P^a(s, .)` using one uniform from `rng`; the cost is `c(s, a)`.
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> Result<Transition> {
        self.check_state(s)?;
        self.check_action(a)?;
        Ok(Transition {
            next_state: sample_index(&self.transition[a][s], rng),
            cost: self.stage_cost[s][a],
        })
    }

    /// `R * sum_{k=0}^{H} gamma^k`: bound on any discounted cumulative cost
    /// over `horizon` steps plus the terminal cost.
    pub fn discounted_cost_bound(&self, horizon: usize) -> f64 {
        discounted_cost_bound(self.cost_bound, self.gamma, horizon)
    }

    /// Same model with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..self.clone() }
    }
}

pub fn discounted_cost_bound(cost_bound: f64, gamma: f64, horizon: usize) -> f64 {
    if gamma == 1.0 {
        cost_bound * (horizon as f64 + 1.0)
    } else {
        cost_bound * (1.0 - gamma.powi(horizon as i32 + 1)) / (1.0 - gamma)
    }
}

/// Configuration of the four-state risky/safe benchmark.
///
/// From `s0`, the risky action `a0` reaches `s2` (cost 1) with probability
/// `1 - epsilon` and `s3` (cost 20) with probability `epsilon`; the safe
/// action `a1` reaches `s1` (cost 5) surely. `s1..s3` are absorbing apart
/// from a reset to `s0` with probability `reset_prob` each step, whatever the
/// action. Costs depend on the state only and the terminal cost equals the
/// stage cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mdp4 {
    pub epsilon: f64,
    pub reset_prob: f64,
    /// Also apply the reset to `s0`'s own rows. Off by default: from `s0`
    /// the chosen action alone decides the next state.
    pub reset_at_initial: bool,
    pub gamma: f64,
    pub horizon: usize,
}

impl Mdp4 {
    pub const STATE_COSTS: [f64; 4] = [0.0, 5.0, 1.0, 20.0];
    pub const RISKY: usize = 0;
    pub const SAFE: usize = 1;
}

impl Default for Mdp4 {
    fn default() -> Self {
        Self { epsilon: 0.1, reset_prob: 0.1, reset_at_initial: false, gamma: 0.9, horizon: 100 }
    }
}

impl Mdp4 {
    pub fn build(&self) -> Result<TabularMdp> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.reset_prob >= 0.0 && self.reset_prob < 1.0) {
            return Err(Error::Config(format!(
                "reset probability must lie in [0, 1), got {}",
                self.reset_prob
            )));
        }
        let r = self.reset_prob;
        let e = self.epsilon;
        let mut transition = vec![vec![vec![0.0; 4]; 4]; 2];
        transition[Mdp4::RISKY][0] = vec![0.0, 0.0, 1.0 - e, e];
        transition[Mdp4::SAFE][0] = vec![0.0, 1.0, 0.0, 0.0];
        if self.reset_at_initial {
            for matrix in transition.iter_mut() {
                for p in matrix[0].iter_mut() {
                    *p *= 1.0 - r;
                }
                matrix[0][0] += r;
            }
        }
        for matrix in transition.iter_mut() {
            for (s, row) in matrix.iter_mut().enumerate().skip(1) {
                row[0] = r;
                row[s] = 1.0 - r;
            }
        }
        let costs = Mdp4::STATE_COSTS;
        let mdp = TabularMdp {
            num_states: 4,
            num_actions: 2,
            transition,
            stage_cost: costs.iter().map(|&c| vec![c; 2]).collect(),
            terminal_cost: costs.to_vec(),
            gamma: self.gamma,
            horizon: self.horizon,
            initial_state: 0,
            cost_bound: 20.0,
        };
        mdp.validate()?;
        Ok(mdp)
    }
}

/// The four-state benchmark with `gamma = 0.9`, `H = 100`, `R = 20`.
pub fn mdp4(epsilon: f64, reset_prob: f64) -> Result<TabularMdp> {
    Mdp4 { epsilon, reset_prob, ..Mdp4::default() }.build()
}

/// Random instance for oracle cross-checks: rows are normalized positive
/// uniforms, costs uniform in `[-R, R]`, initial state 0.
pub fn random_mdp(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    gamma: f64,
    cost_bound: f64,
    seed: u64,
) -> Result<TabularMdp> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::Config("random MDP sizes must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transition = Vec::with_capacity(num_actions);
    for _ in 0..num_actions {
        let mut matrix = Vec::with_capacity(num_states);
        for _ in 0..num_states {
            // 1 - U(0, 1] keeps every weight strictly positive.
            let raw: Vec<f64> = (0..num_states).map(|_| 1.0 - rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            matrix.push(raw.into_iter().map(|w| w / total).collect());
        }
        transition.push(matrix);
    }
    let stage_cost = (0..num_states)
        .map(|_| (0..num_actions).map(|_| rng.random_range(-cost_bound..=cost_bound)).collect())
        .collect();
    let terminal_cost =
        (0..num_states).map(|_| rng.random_range(-cost_bound..=cost_bound)).collect();
    let mdp = TabularMdp {
        num_states,
        num_actions,
        transition,
        stage_cost,
        terminal_cost,
        gamma,
        horizon,
        initial_state: 0,
        cost_bound,
    };
    mdp.validate()?;
    Ok(mdp)
}
