//! Interleaved sampling and refinement with per-refinement metrics.

use std::io::Write;
use std::sync::Arc;

use osstar_core::{CostModel, Engine, EngineError, History, Metrics, Mode, StopConfig};
use serde::Serialize;

use crate::model::{Configuration, PairwiseModel};
use crate::piecewise::{PiecewiseProposal, TreeRule};
use crate::policy::{GmRefiner, PolicyKind};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub policy: PolicyKind,
    pub refinements: usize,
    /// Trials between refinements for policies that ignore rejects.
    pub batch: usize,
    /// Sample count in the projected total time.
    pub n: usize,
    pub cost: CostModel,
    /// Gives up once this many trials pass without reaching the budget.
    pub max_trials: usize,
    pub rule: TreeRule,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(policy: PolicyKind, refinements: usize, seed: u64) -> Self {
        Self {
            policy,
            refinements,
            batch: 1,
            n: 1,
            cost: CostModel::default(),
            max_trials: 1_000_000,
            rule: TreeRule::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub refinement_index: usize,
    pub ar_hat: f64,
    pub z_hat_log: f64,
    pub q_mass_log: f64,
    pub tau_ref: f64,
    pub tau_samp: f64,
    pub tau_tot_est: f64,
}

#[derive(Debug)]
pub struct BenchRun {
    pub rows: Vec<BenchRow>,
    pub proposal: PiecewiseProposal,
    pub history: History<Configuration>,
}

/// Samples from the current proposal and refines it until the budget is
/// spent, recording the estimators after every refinement.
///
/// Policies (i) and (ii) refine on each reject; (iii) and (iv) refine after
/// every `batch` trials.
pub fn policy_bench(model: Arc<PairwiseModel>, config: &BenchConfig) -> Result<BenchRun, EngineError> {
    let proposal = PiecewiseProposal::new(model.clone(), config.rule);
    let stop = StopConfig {
        max_refinements: config.refinements,
        ..StopConfig::default()
    };
    let target = move |x: &Configuration| model.log_p(x);
    let mut engine = Engine::new(
        Mode::Sampling,
        target,
        proposal,
        GmRefiner::new(config.policy),
        stop,
        config.seed,
    )
    .with_cost_model(config.cost);
    let mut rows = Vec::with_capacity(config.refinements);
    let mut since = 0;
    while engine.refinements() < config.refinements && engine.history().trial_count() < config.max_trials {
        let accepted = engine.trial()?.accepted;
        let idx = engine.history().trial_count() - 1;
        since += 1;
        let refined = if config.policy.uses_reject() {
            !accepted && engine.refine(Some(idx))?
        } else if since >= config.batch.max(1) {
            since = 0;
            match engine.refine(None) {
                Err(EngineError::Refine(osstar_core::RefineError::NoRefinementAvailable)) => break,
                other => other?,
            }
        } else {
            false
        };
        if refined {
            let mass = engine.proposal().total_mass_log();
            let m = Metrics::compute(engine.history(), mass, config.n, 100)?;
            rows.push(BenchRow {
                refinement_index: engine.refinements(),
                ar_hat: m.pi_hat,
                z_hat_log: m.z_hat_log,
                q_mass_log: mass,
                tau_ref: m.tau_ref,
                tau_samp: m.tau_samp,
                tau_tot_est: m.tau_tot,
            });
        }
    }
    let result = engine.finish();
    Ok(BenchRun {
        rows,
        proposal: result.final_proposal,
        history: result.history,
    })
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
