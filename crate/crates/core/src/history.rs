use serde::Serialize;

/// One draw from the proposal together with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord<C> {
    pub config: C,
    pub log_p: f64,
    pub log_q: f64,
    pub accepted: bool,
    /// `ln Q_t(X)` of the proposal the trial was drawn from.
    pub proposal_mass_log: f64,
    /// Seconds, either measured or from an injected cost model.
    pub trial_cost: f64,
}

impl<C> TrialRecord<C> {
    pub fn log_ratio(&self) -> f64 {
        self.log_p - self.log_q
    }

    /// `log q - log p`, the slack the bound leaves at this configuration.
    pub fn log_gap(&self) -> f64 {
        self.log_q - self.log_p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRecord {
    /// Number of trials completed when the refinement was applied.
    pub after_trial: usize,
    pub cost: f64,
    pub work: f64,
    pub mass_log_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct History<C> {
    records: Vec<TrialRecord<C>>,
    accept_count: usize,
    refinements: Vec<RefinementRecord>,
}

impl<C> Default for History<C> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            accept_count: 0,
            refinements: Vec::new(),
        }
    }
}

impl<C> History<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TrialRecord<C>) {
        if record.accepted {
            self.accept_count += 1;
        }
        self.records.push(record);
    }

    pub fn push_refinement(&mut self, record: RefinementRecord) {
        self.refinements.push(record);
    }

    pub fn records(&self) -> &[TrialRecord<C>] {
        &self.records
    }

    pub fn refinements(&self) -> &[RefinementRecord] {
        &self.refinements
    }

    pub fn trial_count(&self) -> usize {
        self.records.len()
    }

    pub fn accept_count(&self) -> usize {
        self.accept_count
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TrialRecord<C>> {
        self.records.last()
    }

    pub fn cumulative_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.accept_count as f64 / self.records.len() as f64
        }
    }

    /// Acceptance rate over the last `window` trials (fewer if the history is shorter).
    pub fn window_rate(&self, window: usize) -> f64 {
        let n = window.min(self.records.len());
        if n == 0 {
            return 0.0;
        }
        let accepted = self.records[self.records.len() - n..]
            .iter()
            .filter(|r| r.accepted)
            .count();
        accepted as f64 / n as f64
    }

    pub fn accepted_configs(&self) -> impl Iterator<Item = &C> {
        self.records.iter().filter(|r| r.accepted).map(|r| &r.config)
    }

    pub fn total_refinement_cost(&self) -> f64 {
        self.refinements.iter().map(|r| r.cost).sum()
    }

    pub fn total_trial_cost(&self) -> f64 {
        self.records.iter().map(|r| r.trial_cost).sum()
    }
}
