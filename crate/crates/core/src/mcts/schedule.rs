//! Per-depth exploration parameters for the tree search.
//!
//! A decision node at depth `h` scores its actions with the bonus parameters
//! of depth `h + 1`. The theoretical schedule fixes `xi_H` at the leaves and
//! recurses upward:
//!
//! ```text
//! alpha_h = eta (1 - eta) xi_h,    xi_h = alpha_{h+1} - 1   (h < H)
//! ```
//!
//! and needs `xi_h > 1`, `alpha_h > 2` at every depth. With `c = eta (1 - eta)`
//! the smallest admissible leaf value satisfies `xi_1 = max(2/c, 1)`,
//! `xi_{h+1} = (xi_h + 1) / c`, so it grows like `c^-H` (`4^H` at `eta = 1/2`).
//! `theta_h = 2^(xi_h / 2)` makes `theta^(1/xi) = sqrt(2)` at every depth.

use serde::{Deserialize, Serialize};

use crate::bandit::BonusParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParameterSchedule {
    /// Depth-uniform bonus `sqrt(2) t^(eta (1 - eta)) / s^(1 - eta)`.
    Practical { eta: f64 },
    /// Entry `h - 1` of each vector holds the depth-`h` value, `h = 1..=H`.
    Theoretical {
        eta: f64,
        xi: Vec<f64>,
        alpha: Vec<f64>,
        theta: Vec<f64>,
    },
}

impl Default for ParameterSchedule {
    fn default() -> Self {
        ParameterSchedule::Practical { eta: 0.5 }
    }
}

impl ParameterSchedule {
    pub fn practical(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(ParameterSchedule::Practical { eta })
    }

    pub fn eta(&self) -> f64 {
        match self {
            ParameterSchedule::Practical { eta } | ParameterSchedule::Theoretical { eta, .. } => *eta,
        }
    }

    /// Number of depths covered, `None` for the depth-uniform schedule.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            ParameterSchedule::Practical { .. } => None,
            ParameterSchedule::Theoretical { xi, .. } => Some(xi.len()),
        }
    }

    /// Bonus parameters at `depth` in `1..=H`.
    pub fn bonus_params(&self, depth: usize) -> Result<BonusParams> {
        match self {
            ParameterSchedule::Practical { eta } => BonusParams::practical(*eta),
            ParameterSchedule::Theoretical { eta, xi, alpha, theta } => {
                if depth == 0 || depth > xi.len() {
                    return Err(Error::OutOfRange { what: "schedule depth", index: depth, size: xi.len() });
                }
                let i = depth - 1;
                BonusParams::new(theta[i], xi[i], alpha[i], *eta)
            }
        }
    }

    /// Bonus parameters for depths `1..=horizon`, as a vector indexed by
    /// `depth - 1`.
    pub fn bonus_table(&self, horizon: usize) -> Result<Vec<BonusParams>> {
        if let Some(h) = self.horizon() {
            if h != horizon {
                return Err(Error::Config(format!(
                    "schedule covers {h} depths but the search horizon is {horizon}"
                )));
            }
        }
        (1..=horizon).map(|d| self.bonus_params(d)).collect()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.5..1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::Config(format!("eta must lie in [1/2, 1), got {eta}")))
    }
}

/// Smallest `xi_H` (exclusive) for which the schedule is feasible.
pub fn minimal_terminal_xi(horizon: usize, eta: f64) -> f64 {
    let c = eta * (1.0 - eta);
    let mut xi = (2.0 / c).max(1.0);
    for _ in 1..horizon {
        xi = (xi + 1.0) / c;
    }
    xi
}

/// Theoretical schedule from the leaf value `xi_terminal`.
///
/// Fails on the deepest violated depth, i.e. the first one reached by the
/// upward recursion.
pub fn schedule_parameters(horizon: usize, eta: f64, xi_terminal: f64) -> Result<ParameterSchedule> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    check_eta(eta)?;
    if !xi_terminal.is_finite() {
        return Err(Error::NonFinite { what: "xi", value: xi_terminal });
    }
    let c = eta * (1.0 - eta);
    let infeasible = |depth, param, value, bound| Error::ScheduleInfeasible {
        depth,
        param,
        value,
        bound,
        min_terminal_xi: minimal_terminal_xi(horizon, eta),
    };
    let mut xi = vec![0.0; horizon];
    let mut alpha = vec![0.0; horizon];
    let mut next_alpha = f64::NAN;
    for depth in (1..=horizon).rev() {
        let x = if depth == horizon { xi_terminal } else { next_alpha - 1.0 };
        if x <= 1.0 {
            return Err(infeasible(depth, "xi", x, 1.0));
        }
        let a = c * x;
        if a <= 2.0 {
            return Err(infeasible(depth, "alpha", a, 2.0));
        }
        xi[depth - 1] = x;
        alpha[depth - 1] = a;
        next_alpha = a;
    }
    let theta = xi.iter().map(|x| 2f64.powf(x / 2.0)).collect();
    Ok(ParameterSchedule::Theoretical { eta, xi, alpha, theta })
}

/// How to obtain a schedule for an arbitrary search horizon, as needed when
/// replanning with a shrinking horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScheduleSpec {
    Practical { eta: f64 },
    Theoretical { eta: f64, xi_terminal: f64 },
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Practical { eta: 0.5 }
    }
}

impl ScheduleSpec {
    pub fn build(&self, horizon: usize) -> Result<ParameterSchedule> {
        match *self {
            ScheduleSpec::Practical { eta } => ParameterSchedule::practical(eta),
            ScheduleSpec::Theoretical { eta, xi_terminal } => schedule_parameters(horizon, eta, xi_terminal),
        }
    }
}

impl From<&ParameterSchedule> for ScheduleSpec {
    fn from(s: &ParameterSchedule) -> Self {
        match s {
            ParameterSchedule::Practical { eta } => ScheduleSpec::Practical { eta: *eta },
            ParameterSchedule::Theoretical { eta, xi, .. } => ScheduleSpec::Theoretical {
                eta: *eta,
                xi_terminal: xi.last().copied().unwrap_or(f64::NAN),
            },
        }
    }
}
