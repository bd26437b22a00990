use thiserror::Error;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("no refinement available at the rejected configuration")]
    NoRefinementAvailable,
    #[error("selected subspace has no unassigned node")]
    NoUnassignedNode,
    #[error("refinement policy needs a rejected configuration")]
    MissingReject,
    #[error("{0}")]
    Backend(String),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("refinement budget of {0} exhausted before the stop rule held")]
    RefinementExhausted(usize),
    #[error("trial budget of {0} exhausted before the stop rule held")]
    TrialLimitReached(usize),
    #[error("domination violated: log p = {log_p} exceeds log q = {log_q}")]
    DominationViolated { log_p: f64, log_q: f64 },
    #[error("acceptance ratio {0} outside [0, 1]")]
    RatioOutOfRange(f64),
    #[error("history is empty")]
    EmptyHistory,
    #[error("refinement failed: {0}")]
    Refine(#[from] RefineError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
