pub type Result<T, E = ExpError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error(transparent)]
    Core(#[from] ermtree::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExpError {
    /// Whether the failure comes from bad input (model, parameters, flags)
    /// rather than from the run itself.
    pub fn is_validation(&self) -> bool {
        use ermtree::Error as E;
        match self {
            ExpError::Config(_) => true,
            ExpError::Core(e) => !matches!(e, E::Io(_) | E::EmptyEstimator | E::BudgetExceeded { .. }),
            _ => false,
        }
    }
}
