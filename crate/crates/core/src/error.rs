use std::fmt;

use crate::mdp::MdpViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("risk parameter must be finite and > 0, got {0}")]
    InvalidRiskParam(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("estimator has no samples")]
    EmptyEstimator,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cost {value} outside declared bound [-{bound}, {bound}]")]
    CostOutOfBounds { value: f64, bound: f64 },

    #[error("invalid MDP: {}", ViolationList(.0))]
    InvalidMdp(Vec<MdpViolation>),

    #[error("index out of range: {what} {index} (size {size})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("enumeration too large: {what} would exceed the budget of {limit}")]
    BudgetExceeded { what: &'static str, limit: u64 },

    #[error(
        "infeasible parameter schedule: {param}_{depth} = {value} violates {param} > {bound}; \
         xi at the leaf depth must exceed {min_terminal_xi}"
    )]
    ScheduleInfeasible {
        depth: usize,
        param: &'static str,
        value: f64,
        bound: f64,
        min_terminal_xi: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct ViolationList<'a>(&'a [MdpViolation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
