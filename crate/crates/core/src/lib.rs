//! Backend-agnostic driver for joint exact sampling and exact optimization
//! by adaptive refinement of an upper bound `q >= p`.
//!
//! A run repeatedly draws from the current proposal (a sample in
//! [`Mode::Sampling`], the argmax in [`Mode::Optimization`]), compares the
//! proposal value against the target and refines the proposal on every
//! reject. Backends supply a [`Proposal`] and a [`Refiner`]; the
//! [`Engine`] owns the loop, the history and the stop rules.
//!
//! All weights are carried in the natural-log domain.

pub mod engine;
pub mod error;
pub mod history;
pub mod logspace;
pub mod metrics;
pub mod proposal;
pub mod stop;
pub mod table;

pub use engine::{accept_or_reject, CostModel, Decision, Engine, RunResult};
pub use error::{EngineError, RefineError};
pub use history::{History, RefinementRecord, TrialRecord};
pub use metrics::{write_trial_csv, Metrics, RunningEstimate};
pub use proposal::{EngineRng, NoRefine, Proposal, RefineOutcome, Refiner, Target};
pub use stop::{should_stop, StopConfig};

/// Which norm the run is driving down: `L1` (sampling) or `L∞` (optimization).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Sampling,
    Optimization,
}

/// Slack allowed when checking `log p <= log q`.
pub const DOMINATION_TOLERANCE: f64 = 1e-9;
