use std::time::Instant;

use rand::{Rng, SeedableRng};

use crate::error::EngineError;
use crate::history::{History, RefinementRecord, TrialRecord};
use crate::proposal::{EngineRng, Proposal, Refiner, Target};
use crate::stop::{should_stop, StopConfig};
use crate::{Mode, DOMINATION_TOLERANCE};

/// Slack (linear ratio) for the exact-ratio acceptance test in optimization mode.
const OPT_RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// How trial and refinement times are charged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    WallClock,
    /// Deterministic costs: `per_trial * trial_work` seconds per trial and
    /// `per_work_unit * work` seconds per refinement.
    Injected { per_trial: f64, per_work_unit: f64 },
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::Injected {
            per_trial: 1.0,
            per_work_unit: 1.0,
        }
    }
}

/// Bernoulli acceptance when sampling; exact-ratio test when optimizing.
pub fn accept_or_reject(
    mode: Mode,
    ratio: f64,
    opt_ratio_tolerance: f64,
    rng: &mut EngineRng,
) -> Result<Decision, EngineError> {
    if !(0.0..=1.0 + DOMINATION_TOLERANCE).contains(&ratio) {
        return Err(EngineError::RatioOutOfRange(ratio));
    }
    let accept = match mode {
        Mode::Sampling => rng.random::<f64>() < ratio,
        Mode::Optimization => ratio >= 1.0 - opt_ratio_tolerance - OPT_RATIO_SLACK,
    };
    Ok(if accept {
        Decision::Accept
    } else {
        Decision::Reject
    })
}

#[derive(Debug)]
pub struct RunResult<P: Proposal> {
    pub mode: Mode,
    /// Every accepted configuration; in optimization mode the single argmax.
    pub accepted: Vec<P::Config>,
    pub final_proposal: P,
    pub history: History<P::Config>,
    pub refinements: usize,
    /// `ln q(x*) - ln p(x*)` at the returned argmax (optimization only).
    pub certificate_gap_log: Option<f64>,
}

impl<P: Proposal> RunResult<P> {
    pub fn argmax(&self) -> Option<&P::Config> {
        match self.mode {
            Mode::Optimization => self.accepted.last(),
            Mode::Sampling => None,
        }
    }
}

/// The trial/accept/refine loop over one target and one proposal.
pub struct Engine<T, P: Proposal, R> {
    mode: Mode,
    target: T,
    proposal: P,
    refiner: R,
    stop: StopConfig,
    cost: CostModel,
    history: History<P::Config>,
    trial_rng: EngineRng,
    refine_rng: EngineRng,
    refinements: usize,
}

impl<T, P, R> Engine<T, P, R>
where
    P: Proposal,
    T: Target<P::Config>,
    R: Refiner<P>,
{
    /// Trial draws and refinement decisions use separate streams of the same
    /// seed, so a change of refinement policy does not perturb trial draws.
    pub fn new(mode: Mode, target: T, proposal: P, refiner: R, stop: StopConfig, seed: u64) -> Self {
        let mut trial_rng = EngineRng::seed_from_u64(seed);
        trial_rng.set_stream(0);
        let mut refine_rng = EngineRng::seed_from_u64(seed);
        refine_rng.set_stream(1);
        Self {
            mode,
            target,
            proposal,
            refiner,
            stop,
            cost: CostModel::default(),
            history: History::new(),
            trial_rng,
            refine_rng,
            refinements: 0,
        }
    }

    pub fn with_cost_model(mut self, cost: CostModel) -> Self {
        self.cost = cost;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn history(&self) -> &History<P::Config> {
        &self.history
    }

    pub fn proposal(&self) -> &P {
        &self.proposal
    }

    pub fn proposal_mut(&mut self) -> &mut P {
        &mut self.proposal
    }

    pub fn target(&self) -> &T {
        &self.target
    }

    pub fn refiner(&self) -> &R {
        &self.refiner
    }

    pub fn refinements(&self) -> usize {
        self.refinements
    }

    pub fn stop_config(&self) -> &StopConfig {
        &self.stop
    }

    pub fn should_stop(&self) -> bool {
        should_stop(&self.history, self.mode, &self.stop)
    }

    /// Draws one configuration, scores it and records the verdict. Never refines.
    pub fn trial(&mut self) -> Result<&TrialRecord<P::Config>, EngineError> {
        let started = Instant::now();
        let proposal_mass_log = self.proposal.log_mass();
        let (config, log_q) = match self.mode {
            Mode::Sampling => {
                let x = self.proposal.sample(&mut self.trial_rng);
                let lq = self.proposal.log_q(&x);
                (x, lq)
            }
            Mode::Optimization => self.proposal.argmax(),
        };
        let log_p = self.target.log_p(&config);
        if log_p > log_q + DOMINATION_TOLERANCE {
            return Err(EngineError::DominationViolated { log_p, log_q });
        }
        let ratio = if log_p == f64::NEG_INFINITY {
            0.0
        } else {
            (log_p - log_q).exp().min(1.0)
        };
        let decision =
            accept_or_reject(self.mode, ratio, self.stop.opt_ratio_tolerance, &mut self.trial_rng)?;
        let trial_cost = match self.cost {
            CostModel::WallClock => started.elapsed().as_secs_f64(),
            CostModel::Injected { per_trial, .. } => per_trial * self.proposal.trial_work(),
        };
        self.history.push(TrialRecord {
            config,
            log_p,
            log_q,
            accepted: decision == Decision::Accept,
            proposal_mass_log,
            trial_cost,
        });
        Ok(self.history.last().expect("record just pushed"))
    }

    /// Applies one refinement, using the history record at `rejected` if given.
    ///
    /// Returns whether the proposal changed.
    pub fn refine(&mut self, rejected: Option<usize>) -> Result<bool, EngineError> {
        if self.refinements >= self.stop.max_refinements {
            return Err(EngineError::RefinementExhausted(self.stop.max_refinements));
        }
        let started = Instant::now();
        let record = rejected.map(|i| &self.history.records()[i]);
        let outcome =
            self.refiner
                .refine(&mut self.proposal, record, self.mode, &mut self.refine_rng)?;
        if !outcome.applied {
            return Ok(false);
        }
        let cost = match self.cost {
            CostModel::WallClock => started.elapsed().as_secs_f64(),
            CostModel::Injected { per_work_unit, .. } => per_work_unit * outcome.work,
        };
        self.refinements += 1;
        let mass_log_after = self.proposal.log_mass();
        self.history.push_refinement(RefinementRecord {
            after_trial: self.history.trial_count(),
            cost,
            work: outcome.work,
            mass_log_after,
        });
        Ok(true)
    }

    /// One iteration of the loop: a trial, then a refinement if it was rejected.
    pub fn step(&mut self) -> Result<Decision, EngineError> {
        let accepted = self.trial()?.accepted;
        if accepted {
            Ok(Decision::Accept)
        } else {
            let idx = self.history.trial_count() - 1;
            self.refine(Some(idx))?;
            Ok(Decision::Reject)
        }
    }

    /// `batch` trials from the frozen proposal, then at most one refinement
    /// driven by the batch's reject with the largest `log q - log p`.
    ///
    /// Stops early once the stop rule holds.
    pub fn batch_step(&mut self, batch: usize) -> Result<(), EngineError> {
        let start = self.history.trial_count();
        for _ in 0..batch.max(1) {
            self.trial()?;
            if self.should_stop() {
                return Ok(());
            }
        }
        let worst = self.history.records()[start..]
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.accepted)
            .max_by(|(ia, a), (ib, b)| a.log_gap().total_cmp(&b.log_gap()).then(ib.cmp(ia)))
            .map(|(i, _)| start + i);
        if let Some(idx) = worst {
            self.refine(Some(idx))?;
        }
        Ok(())
    }

    /// Runs the loop until the stop rule holds, refining on every reject.
    pub fn run(self) -> Result<RunResult<P>, EngineError> {
        self.run_batched(1)
    }

    /// Like [`run`](Self::run), but sampling trials come in frozen batches.
    /// Optimization always proceeds one trial at a time.
    pub fn run_batched(mut self, batch: usize) -> Result<RunResult<P>, EngineError> {
        while !self.should_stop() {
            if self.history.trial_count() >= self.stop.max_trials {
                return Err(EngineError::TrialLimitReached(self.stop.max_trials));
            }
            match self.mode {
                Mode::Sampling if batch > 1 => self.batch_step(batch)?,
                _ => {
                    self.step()?;
                }
            }
        }
        Ok(self.finish())
    }

    /// Keeps sampling until `accepts` more configurations have been accepted.
    /// Rejects refine the proposal only when `refine` is set.
    pub fn collect(&mut self, accepts: usize, refine: bool) -> Result<(), EngineError> {
        let target = self.history.accept_count() + accepts;
        while self.history.accept_count() < target {
            if self.history.trial_count() >= self.stop.max_trials {
                return Err(EngineError::TrialLimitReached(self.stop.max_trials));
            }
            if refine {
                self.step()?;
            } else {
                self.trial()?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> RunResult<P> {
        let accepted: Vec<P::Config> = match self.mode {
            Mode::Sampling => self.history.accepted_configs().cloned().collect(),
            Mode::Optimization => self
                .history
                .last()
                .filter(|r| r.accepted)
                .map(|r| vec![r.config.clone()])
                .unwrap_or_default(),
        };
        let certificate_gap_log = match self.mode {
            Mode::Optimization => self.history.last().filter(|r| r.accepted).map(|r| r.log_gap()),
            Mode::Sampling => None,
        };
        RunResult {
            mode: self.mode,
            accepted,
            final_proposal: self.proposal,
            history: self.history,
            refinements: self.refinements,
            certificate_gap_log,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> EngineRng {
        EngineRng::seed_from_u64(7)
    }

    #[test]
    fn optimization_accepts_only_unit_ratio() {
        let mut r = rng();
        assert_eq!(accept_or_reject(Mode::Optimization, 1.0, 0.0, &mut r).unwrap(), Decision::Accept);
        assert_eq!(accept_or_reject(Mode::Optimization, 0.999, 0.0, &mut r).unwrap(), Decision::Reject);
        assert_eq!(accept_or_reject(Mode::Optimization, 0.95, 0.1, &mut r).unwrap(), Decision::Accept);
    }

    #[test]
    fn sampling_zero_ratio_always_rejects() {
        let mut r = rng();
        for _ in 0..1000 {
            assert_eq!(accept_or_reject(Mode::Sampling, 0.0, 0.0, &mut r).unwrap(), Decision::Reject);
            assert_eq!(accept_or_reject(Mode::Sampling, 1.0, 0.0, &mut r).unwrap(), Decision::Accept);
        }
    }

    #[test]
    fn bernoulli_frequency_matches_ratio() {
        let mut r = rng();
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| accept_or_reject(Mode::Sampling, 0.25, 0.0, &mut r).unwrap() == Decision::Accept)
            .count();
        assert!((hits as f64 / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn ratio_above_one_is_rejected_as_error() {
        let mut r = rng();
        assert!(matches!(
            accept_or_reject(Mode::Sampling, 1.01, 0.0, &mut r),
            Err(EngineError::RatioOutOfRange(_))
        ));
        assert!(accept_or_reject(Mode::Sampling, -0.1, 0.0, &mut r).is_err());
        assert!(accept_or_reject(Mode::Sampling, 1.0 + 1e-10, 0.0, &mut r).is_ok());
    }
}
