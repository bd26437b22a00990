use osstar_core::{EngineRng, Mode, RefineError, RefineOutcome, Refiner, TrialRecord};

use crate::automaton::{ContextExtension, QAutomaton, SelectionCriterion};
use crate::error::HmmError;
use crate::problem::Sentence;

/// Extends one n-gram context along each rejected sentence.
#[derive(Debug, Clone)]
pub struct ContextRefiner {
    criterion: SelectionCriterion,
    log: Vec<ContextExtension>,
}

impl ContextRefiner {
    pub fn new(criterion: SelectionCriterion) -> Self {
        Self {
            criterion,
            log: Vec::new(),
        }
    }

    /// Extensions applied so far, in order.
    pub fn applied(&self) -> &[ContextExtension] {
        &self.log
    }
}

impl Default for ContextRefiner {
    fn default() -> Self {
        Self::new(SelectionCriterion::PointwiseGap)
    }
}

impl Refiner<QAutomaton> for ContextRefiner {
    fn refine(
        &mut self,
        proposal: &mut QAutomaton,
        rejected: Option<&TrialRecord<Sentence>>,
        mode: Mode,
        _rng: &mut EngineRng,
    ) -> Result<RefineOutcome, RefineError> {
        let rejected = rejected.ok_or(RefineError::MissingReject)?;
        let before = proposal.len();
        let ext = proposal
            .refine(&rejected.config, self.criterion, mode == Mode::Optimization)
            .map_err(|e| match e {
                HmmError::NoRefinementAvailable => RefineError::NoRefinementAvailable,
                other => RefineError::Backend(other.to_string()),
            })?;
        let work = match self.criterion {
            SelectionCriterion::PointwiseGap => before as f64,
            SelectionCriterion::Norm => (before * proposal.len()) as f64,
        };
        self.log.push(ext);
        Ok(RefineOutcome::applied(work))
    }
}
