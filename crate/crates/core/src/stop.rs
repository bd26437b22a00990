use serde::{Deserialize, Serialize};

use crate::history::History;
use crate::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopConfig {
    pub ar_window: usize,
    pub ar_threshold: f64,
    /// `0` demands an exact ratio of one at the returned argmax.
    pub opt_ratio_tolerance: f64,
    pub max_refinements: usize,
    pub max_trials: usize,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            ar_window: 100,
            ar_threshold: 0.2,
            opt_ratio_tolerance: 0.0,
            max_refinements: 100_000,
            max_trials: 10_000_000,
        }
    }
}

impl StopConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.ar_threshold > 0.0 && self.ar_threshold <= 1.0) {
            return Err(format!("ar_threshold must lie in (0, 1], got {}", self.ar_threshold));
        }
        if self.ar_window == 0 {
            return Err("ar_window must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.opt_ratio_tolerance) {
            return Err(format!(
                "opt_ratio_tolerance must lie in [0, 1), got {}",
                self.opt_ratio_tolerance
            ));
        }
        Ok(())
    }
}

/// Sampling stops once a full window of trials reaches the acceptance
/// threshold; optimization stops on the first accepted argmax.
pub fn should_stop<C>(history: &History<C>, mode: Mode, stop: &StopConfig) -> bool {
    match mode {
        Mode::Sampling => {
            history.trial_count() >= stop.ar_window
                && history.window_rate(stop.ar_window) >= stop.ar_threshold
        }
        Mode::Optimization => history.last().is_some_and(|r| r.accepted),
    }
}
