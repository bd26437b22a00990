//! Choosing which leaf to split, and on which node.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use ordered_float::OrderedFloat;
use osstar_core::logspace::{log_sub, log_sum_exp};
use osstar_core::{EngineRng, Mode, RefineError, RefineOutcome, Refiner, TrialRecord};
use rand::seq::IndexedRandom;

use crate::error::GmError;
use crate::model::Configuration;
use crate::piecewise::PiecewiseProposal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// (i) A random unassigned node of the leaf holding the reject.
    RandomSplitAtReject,
    /// (ii) The node whose split lowers `q` most at the reject.
    HighestGapAtReject,
    /// (iii) A random unassigned node of the heaviest leaf.
    MostProbableRegion,
    /// (iv) The split with the largest drop in total mass.
    HighestAcceptanceRate,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::RandomSplitAtReject,
        PolicyKind::HighestGapAtReject,
        PolicyKind::MostProbableRegion,
        PolicyKind::HighestAcceptanceRate,
    ];

    pub fn uses_reject(self) -> bool {
        matches!(self, PolicyKind::RandomSplitAtReject | PolicyKind::HighestGapAtReject)
    }

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::RandomSplitAtReject => "i",
            PolicyKind::HighestGapAtReject => "ii",
            PolicyKind::MostProbableRegion => "iii",
            PolicyKind::HighestAcceptanceRate => "iv",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| format!("unknown policy {s:?} (expected i, ii, iii or iv)"))
    }
}

/// A candidate split and the drop in the norm it buys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub leaf: usize,
    pub node: usize,
    /// `ln(norm(leaf) - norm(children))`; `-inf` when nothing is gained.
    pub improvement_log: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct QueueKey(OrderedFloat<f64>, Reverse<usize>, Reverse<usize>);

/// Refiner over a [`PiecewiseProposal`] driven by one policy.
#[derive(Debug, Clone)]
pub struct GmRefiner {
    policy: PolicyKind,
    queue: BinaryHeap<QueueKey>,
    scored: BTreeSet<usize>,
    queue_mode: Option<Mode>,
}

/// Norm of one region: mass when sampling, maximum when optimizing.
fn norm(q: &PiecewiseProposal, region: usize, mode: Mode) -> f64 {
    let p = &q.region(region).proposal;
    match mode {
        Mode::Sampling => p.log_mass(),
        Mode::Optimization => p.log_max(),
    }
}

impl GmRefiner {
    pub fn new(policy: PolicyKind) -> Self {
        Self {
            policy,
            queue: BinaryHeap::new(),
            scored: BTreeSet::new(),
            queue_mode: None,
        }
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy
    }

    /// Scores every split of `leaf`; returns the work spent.
    pub fn score_leaf(q: &PiecewiseProposal, leaf: usize, mode: Mode) -> (Vec<Triple>, f64) {
        let mut work = 0.0;
        let before = norm(q, leaf, mode);
        let mut out = Vec::new();
        for node in q.unassigned(leaf) {
            let children: Vec<f64> = (0..q.model().domain(node))
                .map(|k| {
                    let child = q.child_bound(leaf, node, k);
                    work += child.work();
                    match mode {
                        Mode::Sampling => child.log_mass(),
                        Mode::Optimization => child.log_max(),
                    }
                })
                .collect();
            let after = match mode {
                Mode::Sampling => log_sum_exp(children),
                Mode::Optimization => children.into_iter().fold(f64::NEG_INFINITY, f64::max),
            };
            out.push(Triple {
                leaf,
                node,
                improvement_log: log_sub(before, after),
            });
        }
        (out, work)
    }

    fn sync_queue(&mut self, q: &PiecewiseProposal, mode: Mode) -> f64 {
        if self.queue_mode != Some(mode) {
            self.queue.clear();
            self.scored.clear();
            self.queue_mode = Some(mode);
        }
        let mut work = 0.0;
        let fresh: Vec<usize> = q.leaves().filter(|l| !self.scored.contains(l)).collect();
        for leaf in fresh {
            let (triples, w) = Self::score_leaf(q, leaf, mode);
            work += w;
            for t in triples {
                self.queue.push(QueueKey(OrderedFloat(t.improvement_log), Reverse(t.leaf), Reverse(t.node)));
            }
            self.scored.insert(leaf);
        }
        work
    }

    /// Live queue entries, best first (policy (iv) only).
    pub fn queue_triples(&self, q: &PiecewiseProposal) -> Vec<Triple> {
        let mut live: Vec<QueueKey> = self.queue.iter().copied().filter(|k| q.is_leaf(k.1 .0)).collect();
        live.sort_by(|a, b| b.cmp(a));
        live.into_iter()
            .map(|k| Triple {
                leaf: k.1 .0,
                node: k.2 .0,
                improvement_log: k.0 .0,
            })
            .collect()
    }

    /// Picks `(leaf, node)` and reports the work spent choosing.
    pub fn select_refinement(
        &mut self,
        q: &PiecewiseProposal,
        rejected: Option<&Configuration>,
        mode: Mode,
        rng: &mut EngineRng,
    ) -> Result<(usize, usize, f64), GmError> {
        match self.policy {
            PolicyKind::RandomSplitAtReject => {
                let x = rejected.ok_or(GmError::MissingReject)?;
                let leaf = q.leaf_of(x);
                let free = q.unassigned(leaf);
                let node = *free.choose(rng).ok_or(GmError::NoUnassignedNode(leaf))?;
                Ok((leaf, node, 1.0))
            }
            PolicyKind::HighestGapAtReject => {
                let x = rejected.ok_or(GmError::MissingReject)?;
                let leaf = q.leaf_of(x);
                let mut best: Option<(f64, usize)> = None;
                let mut work = 0.0;
                for node in q.unassigned(leaf) {
                    let child = q.child_bound(leaf, node, x[node]);
                    work += child.work();
                    let at = child.log_q(q.model(), x);
                    if best.is_none_or(|(b, _)| at < b) {
                        best = Some((at, node));
                    }
                }
                let (_, node) = best.ok_or(GmError::NoUnassignedNode(leaf))?;
                Ok((leaf, node, work))
            }
            PolicyKind::MostProbableRegion => {
                let mut best: Option<(f64, usize)> = None;
                for leaf in q.leaves() {
                    if q.unassigned(leaf).is_empty() {
                        continue;
                    }
                    let m = norm(q, leaf, mode);
                    if best.is_none_or(|(b, _)| m > b) {
                        best = Some((m, leaf));
                    }
                }
                let (_, leaf) = best.ok_or(GmError::NoRefinementAvailable)?;
                let free = q.unassigned(leaf);
                let node = *free.choose(rng).expect("leaf has a free node");
                Ok((leaf, node, q.leaf_count() as f64))
            }
            PolicyKind::HighestAcceptanceRate => {
                let work = self.sync_queue(q, mode);
                while let Some(QueueKey(_, Reverse(leaf), Reverse(node))) = self.queue.pop() {
                    if q.is_leaf(leaf) {
                        return Ok((leaf, node, work + 1.0));
                    }
                }
                Err(GmError::NoRefinementAvailable)
            }
        }
    }

    /// Selects and applies one split; returns the new leaves and total work.
    pub fn refine_once(
        &mut self,
        q: &mut PiecewiseProposal,
        rejected: Option<&Configuration>,
        mode: Mode,
        rng: &mut EngineRng,
    ) -> Result<(Vec<usize>, f64), GmError> {
        let (leaf, node, mut work) = self.select_refinement(q, rejected, mode, rng)?;
        let children = q.condition(leaf, node)?;
        work += children.iter().map(|&c| q.region(c).proposal.work()).sum::<f64>();
        if self.policy == PolicyKind::HighestAcceptanceRate {
            work += self.sync_queue(q, mode);
        }
        Ok((children, work))
    }
}

impl Refiner<PiecewiseProposal> for GmRefiner {
    fn refine(
        &mut self,
        proposal: &mut PiecewiseProposal,
        rejected: Option<&TrialRecord<Configuration>>,
        mode: Mode,
        rng: &mut EngineRng,
    ) -> Result<RefineOutcome, RefineError> {
        let rejected = rejected.map(|r| &r.config);
        match self.refine_once(proposal, rejected, mode, rng) {
            Ok((_, work)) => Ok(RefineOutcome::applied(work)),
            Err(GmError::MissingReject) => Err(RefineError::MissingReject),
            Err(GmError::NoUnassignedNode(_)) => Err(RefineError::NoUnassignedNode),
            Err(GmError::NoRefinementAvailable) => Err(RefineError::NoRefinementAvailable),
            Err(e) => Err(RefineError::Backend(e.to_string())),
        }
    }
}
