//! Run-level estimators: the unbiased partition-function estimate, the
//! current acceptance-rate estimate and the projected total time.

use std::io::Write;

use serde::Serialize;

use crate::error::EngineError;
use crate::history::History;
use crate::logspace::log_add;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// `ln Ẑ_T` with `Ẑ_T = (1/T) Σ_t r_t Q_t(X)` over all trials.
    pub z_hat_log: f64,
    /// `Ẑ_T / Q_T(X)`, the estimated acceptance rate of the current proposal.
    pub pi_hat: f64,
    /// Mean cost of one trial.
    pub tau_samp: f64,
    /// Total cost of all refinements so far.
    pub tau_ref: f64,
    /// `n * tau_samp / pi_hat + tau_ref`.
    pub tau_tot: f64,
    pub ar_cumulative: f64,
    pub ar_window: f64,
}

impl Metrics {
    pub fn compute<C>(
        history: &History<C>,
        current_mass_log: f64,
        n: usize,
        window: usize,
    ) -> Result<Self, EngineError> {
        if history.is_empty() {
            return Err(EngineError::EmptyHistory);
        }
        let mut est = RunningEstimate::default();
        for r in history.records() {
            est.add(r.log_p - r.log_q, r.proposal_mass_log, r.trial_cost);
        }
        let z_hat_log = est.z_hat_log();
        let pi_hat = (z_hat_log - current_mass_log).exp();
        let tau_samp = est.tau_samp();
        let tau_ref = history.total_refinement_cost();
        Ok(Self {
            z_hat_log,
            pi_hat,
            tau_samp,
            tau_ref,
            tau_tot: tau_total(n, tau_samp, pi_hat, tau_ref),
            ar_cumulative: history.cumulative_rate(),
            ar_window: history.window_rate(window),
        })
    }
}

/// Expected time to obtain `n` samples if refinement stops now.
pub fn tau_total(n: usize, tau_samp: f64, pi_hat: f64, tau_ref: f64) -> f64 {
    n as f64 * tau_samp / pi_hat + tau_ref
}

/// Incrementally maintained `Ẑ_T` and mean trial cost.
#[derive(Debug, Clone, Copy)]
pub struct RunningEstimate {
    log_sum: f64,
    trials: usize,
    cost: f64,
}

impl Default for RunningEstimate {
    fn default() -> Self {
        Self {
            log_sum: f64::NEG_INFINITY,
            trials: 0,
            cost: 0.0,
        }
    }
}

impl RunningEstimate {
    pub fn add(&mut self, log_ratio: f64, mass_log: f64, cost: f64) {
        self.log_sum = log_add(self.log_sum, log_ratio + mass_log);
        self.trials += 1;
        self.cost += cost;
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn z_hat_log(&self) -> f64 {
        self.log_sum - (self.trials as f64).ln()
    }

    pub fn tau_samp(&self) -> f64 {
        self.cost / self.trials as f64
    }
}

#[derive(Serialize)]
struct TrialRow {
    trial: usize,
    accepted: u8,
    log_p: f64,
    log_q: f64,
    q_mass_log: f64,
    ar_cum: f64,
    ar_window: f64,
    z_hat_log: f64,
    pi_hat: f64,
    tau_tot_est: f64,
}

/// Writes one row per trial. `tau_tot_est` is the projected cost of one more
/// sample, counting refinements applied before that trial.
pub fn write_trial_csv<C, W: Write>(
    history: &History<C>,
    window: usize,
    out: W,
) -> Result<(), EngineError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut est = RunningEstimate::default();
    let mut accepted_total = 0usize;
    let mut tau_ref = 0.0;
    let mut next_ref = 0;
    let refinements = history.refinements();
    let records = history.records();
    for (i, r) in records.iter().enumerate() {
        while next_ref < refinements.len() && refinements[next_ref].after_trial <= i {
            tau_ref += refinements[next_ref].cost;
            next_ref += 1;
        }
        est.add(r.log_p - r.log_q, r.proposal_mass_log, r.trial_cost);
        if r.accepted {
            accepted_total += 1;
        }
        let lo = (i + 1).saturating_sub(window);
        let in_window = records[lo..=i].iter().filter(|r| r.accepted).count();
        let z_hat_log = est.z_hat_log();
        let pi_hat = (z_hat_log - r.proposal_mass_log).exp();
        wtr.serialize(TrialRow {
            trial: i + 1,
            accepted: u8::from(r.accepted),
            log_p: r.log_p,
            log_q: r.log_q,
            q_mass_log: r.proposal_mass_log,
            ar_cum: accepted_total as f64 / (i + 1) as f64,
            ar_window: in_window as f64 / (i + 1 - lo) as f64,
            z_hat_log,
            pi_hat,
            tau_tot_est: tau_total(1, est.tau_samp(), pi_hat, tau_ref),
        })?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}
