//! An explicit-table backend over `{0, .., n-1}` for tiny spaces.

use rand::Rng;

use crate::error::RefineError;
use crate::history::TrialRecord;
use crate::logspace::log_sum_exp;
use crate::proposal::{EngineRng, Proposal, RefineOutcome, Refiner};
use crate::Mode;

#[derive(Debug, Clone, PartialEq)]
pub struct TableProposal {
    log_q: Vec<f64>,
}

impl TableProposal {
    pub fn new(log_q: Vec<f64>) -> Self {
        assert!(!log_q.is_empty(), "table proposal needs at least one point");
        Self { log_q }
    }

    pub fn from_linear(q: &[f64]) -> Self {
        Self::new(q.iter().map(|v| v.ln()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.log_q
    }

    pub fn set(&mut self, x: usize, log_q: f64) {
        self.log_q[x] = log_q;
    }
}

impl Proposal for TableProposal {
    type Config = usize;

    fn sample(&mut self, rng: &mut EngineRng) -> usize {
        let total = self.log_mass();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, lq) in self.log_q.iter().enumerate() {
            acc += (lq - total).exp();
            if u < acc {
                return i;
            }
        }
        self.log_q.len() - 1
    }

    fn argmax(&mut self) -> (usize, f64) {
        let mut best = 0;
        for (i, &v) in self.log_q.iter().enumerate() {
            if v > self.log_q[best] {
                best = i;
            }
        }
        (best, self.log_q[best])
    }

    fn log_q(&self, x: &usize) -> f64 {
        self.log_q[*x]
    }

    fn log_mass(&mut self) -> f64 {
        log_sum_exp(self.log_q.iter().copied())
    }
}

/// Lowers `q` to `p` at the rejected point only.
#[derive(Debug, Clone)]
pub struct PointwiseRefiner {
    log_p: Vec<f64>,
}

impl PointwiseRefiner {
    pub fn new(log_p: Vec<f64>) -> Self {
        Self { log_p }
    }
}

impl Refiner<TableProposal> for PointwiseRefiner {
    fn refine(
        &mut self,
        proposal: &mut TableProposal,
        rejected: Option<&TrialRecord<usize>>,
        _mode: Mode,
        _rng: &mut EngineRng,
    ) -> Result<RefineOutcome, RefineError> {
        let x = rejected.ok_or(RefineError::MissingReject)?.config;
        if proposal.log_q[x] <= self.log_p[x] {
            return Err(RefineError::NoRefinementAvailable);
        }
        proposal.set(x, self.log_p[x]);
        Ok(RefineOutcome::applied(1.0))
    }
}
