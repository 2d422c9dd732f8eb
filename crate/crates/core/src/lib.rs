//! Risk-averse planning under the entropic risk measure.
//!
//! * [`erm`]: ERM evaluation and streaming estimation.
//! * [`bandit`]: optimistic (lower-confidence) ERM bandits with polynomial
//!   exploration bonuses.
//! * [`mdp`]: tabular finite-horizon MDPs, the four-state risky/safe
//!   benchmark and a text format.
//! * [`dp`]: exact ERM backward induction and brute-force oracles.
//! * [`mcts`]: ERM Monte-Carlo tree search and an accumulated-cost baseline.

pub mod bandit;
pub mod dp;
pub mod erm;
mod error;
pub mod mcts;
pub mod mdp;
pub mod sampling;

pub use erm::{erm_exact, erm_of_samples, oce_value, DiscreteDistribution, ErmAccumulator, RiskParam};
pub use error::{Error, Result};
pub use mdp::{mdp4, Mdp4, TabularMdp};
