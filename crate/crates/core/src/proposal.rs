use std::fmt::Debug;

use crate::error::RefineError;
use crate::history::TrialRecord;
use crate::Mode;

/// The random stream type threaded through every component of a run.
pub type EngineRng = rand_chacha::ChaCha8Rng;

/// Unnormalized target density, evaluated in the log domain.
pub trait Target<C> {
    fn log_p(&self, x: &C) -> f64;
}

impl<C, F> Target<C> for F
where
    F: Fn(&C) -> f64,
{
    fn log_p(&self, x: &C) -> f64 {
        self(x)
    }
}

/// A refinable upper bound `q >= p` that can be sampled and maximized exactly.
///
/// Methods take `&mut self` so implementations can cache dynamic-programming
/// tables between refinements.
pub trait Proposal {
    type Config: Clone + Ord + Debug;

    /// Draws `x` with probability `q(x) / Q(X)`.
    fn sample(&mut self, rng: &mut EngineRng) -> Self::Config;

    /// The maximizer of `q` and `ln q` there; ties go to the smallest configuration.
    fn argmax(&mut self) -> (Self::Config, f64);

    fn log_q(&self, x: &Self::Config) -> f64;

    /// `ln Q(X)`.
    fn log_mass(&mut self) -> f64;

    /// `ln max_x q(x)`.
    fn log_max(&mut self) -> f64 {
        self.argmax().1
    }

    /// Abstract work units spent on one trial, used by injected cost models.
    fn trial_work(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOutcome {
    /// Whether the proposal changed.
    pub applied: bool,
    /// Abstract work units spent choosing and applying the refinement.
    pub work: f64,
}

impl RefineOutcome {
    pub fn applied(work: f64) -> Self {
        Self { applied: true, work }
    }

    pub fn skipped() -> Self {
        Self {
            applied: false,
            work: 0.0,
        }
    }
}

/// Chooses and applies one-step refinements `q -> q'` with `p <= q' <= q`.
pub trait Refiner<P: Proposal> {
    fn refine(
        &mut self,
        proposal: &mut P,
        rejected: Option<&TrialRecord<P::Config>>,
        mode: Mode,
        rng: &mut EngineRng,
    ) -> Result<RefineOutcome, RefineError>;
}

/// Leaves the proposal frozen.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoRefine;

impl<P: Proposal> Refiner<P> for NoRefine {
    fn refine(
        &mut self,
        _proposal: &mut P,
        _rejected: Option<&TrialRecord<P::Config>>,
        _mode: Mode,
        _rng: &mut EngineRng,
    ) -> Result<RefineOutcome, RefineError> {
        Ok(RefineOutcome::skipped())
    }
}
