//! A hierarchical partition of the configuration space with one tree bound
//! per leaf region: `q(x) = q_leaf(x)(x)`.

use std::collections::BTreeSet;
use std::sync::Arc;

use osstar_core::logspace::log_sum_exp;
use osstar_core::{EngineRng, Proposal};
use rand::Rng;

use crate::error::GmError;
use crate::model::{Configuration, PairwiseModel};
use crate::subspace::SubspaceProposal;
use crate::tree::max_spanning_forest;

/// How a child region chooses its spanning forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TreeRule {
    /// Keep the parent's surviving tree edges and grow them into a maximum
    /// spanning forest of the reduced graph.
    #[default]
    Regrow,
    /// Keep only the parent's surviving tree edges.
    Inherit,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub proposal: SubspaceProposal,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// The node this region was split on, once it is no longer a leaf.
    pub split: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PiecewiseProposal {
    model: Arc<PairwiseModel>,
    rule: TreeRule,
    regions: Vec<Region>,
    leaves: BTreeSet<usize>,
    total_mass_log: f64,
}

impl PiecewiseProposal {
    pub fn new(model: Arc<PairwiseModel>, rule: TreeRule) -> Self {
        let n = model.num_nodes();
        let tree = max_spanning_forest(&model, &vec![true; n], &[]);
        let root = SubspaceProposal::build(&model, vec![None; n], tree);
        let total_mass_log = root.log_mass();
        Self {
            model,
            rule,
            regions: vec![Region {
                proposal: root,
                parent: None,
                children: Vec::new(),
                split: None,
            }],
            leaves: BTreeSet::from([0]),
            total_mass_log,
        }
    }

    pub fn model(&self) -> &Arc<PairwiseModel> {
        &self.model
    }

    pub fn rule(&self) -> TreeRule {
        self.rule
    }

    pub fn region(&self, id: usize) -> &Region {
        &self.regions[id]
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Leaf ids in increasing order.
    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.leaves.iter().copied()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.leaves.contains(&id)
    }

    /// `ln Σ_leaf Q(leaf)`.
    pub fn total_mass_log(&self) -> f64 {
        self.total_mass_log
    }

    /// The leaf whose subspace contains `x`.
    pub fn leaf_of(&self, x: &[usize]) -> usize {
        let mut id = 0;
        while let Some(node) = self.regions[id].split {
            id = self.regions[id].children[x[node]];
        }
        id
    }

    pub fn unassigned(&self, leaf: usize) -> Vec<usize> {
        self.regions[leaf].proposal.free_nodes()
    }

    /// The bound on `leaf`'s subspace further restricted by `node = value`.
    pub fn child_bound(&self, leaf: usize, node: usize, value: usize) -> SubspaceProposal {
        let parent = &self.regions[leaf].proposal;
        let mut evidence = parent.evidence().to_vec();
        evidence[node] = Some(value);
        let kept: Vec<usize> = parent
            .tree()
            .iter()
            .copied()
            .filter(|&e| {
                let edge = self.model.edge(e);
                edge.u != node && edge.v != node
            })
            .collect();
        let tree = match self.rule {
            TreeRule::Inherit => kept,
            TreeRule::Regrow => {
                let free: Vec<bool> = evidence.iter().map(Option::is_none).collect();
                max_spanning_forest(&self.model, &free, &kept)
            }
        };
        SubspaceProposal::build(&self.model, evidence, tree)
    }

    /// Replaces `leaf` by one child per value of `node`. Returns the child ids.
    pub fn condition(&mut self, leaf: usize, node: usize) -> Result<Vec<usize>, GmError> {
        if !self.is_leaf(leaf) {
            return Err(GmError::NotALeaf(leaf));
        }
        if self.regions[leaf].proposal.evidence()[node].is_some() {
            return Err(GmError::AlreadyConditioned { region: leaf, node });
        }
        let mut ids = Vec::with_capacity(self.model.domain(node));
        for value in 0..self.model.domain(node) {
            let proposal = self.child_bound(leaf, node, value);
            ids.push(self.regions.len());
            self.regions.push(Region {
                proposal,
                parent: Some(leaf),
                children: Vec::new(),
                split: None,
            });
        }
        self.regions[leaf].split = Some(node);
        self.regions[leaf].children = ids.clone();
        self.leaves.remove(&leaf);
        self.leaves.extend(ids.iter().copied());
        self.total_mass_log = log_sum_exp(self.leaves.iter().map(|&l| self.regions[l].proposal.log_mass()));
        Ok(ids)
    }

    /// Picks a leaf with probability `Q(leaf) / Q(X)`, then samples inside it.
    pub fn sample_piecewise(&self, rng: &mut EngineRng) -> (Configuration, usize) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for l in self.leaves() {
            let m = self.regions[l].proposal.log_mass();
            if m == f64::NEG_INFINITY {
                continue;
            }
            pick = Some(l);
            acc += (m - self.total_mass_log).exp();
            if u < acc {
                break;
            }
        }
        let leaf = pick.expect("some leaf has positive mass");
        (self.regions[leaf].proposal.sample(&self.model, rng), leaf)
    }

    pub fn log_q(&self, x: &[usize]) -> f64 {
        if x.len() != self.model.num_nodes() || x.iter().enumerate().any(|(v, &k)| k >= self.model.domain(v)) {
            return f64::NEG_INFINITY;
        }
        self.regions[self.leaf_of(x)].proposal.log_q(&self.model, x)
    }

    pub fn log_max(&self) -> f64 {
        self.leaves()
            .map(|l| self.regions[l].proposal.log_max())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The lexicographically smallest maximizer of `q` over all leaves.
    pub fn argmax(&self) -> (Configuration, f64) {
        let best = self.log_max();
        let tol = 1e-12 * best.abs().max(1.0);
        self.leaves()
            .filter(|&l| self.regions[l].proposal.log_max() >= best - tol)
            .map(|l| self.regions[l].proposal.argmax(&self.model))
            .min_by(|a, b| a.0.cmp(&b.0))
            .expect("at least one leaf")
    }
}

impl Proposal for PiecewiseProposal {
    type Config = Configuration;

    fn sample(&mut self, rng: &mut EngineRng) -> Configuration {
        self.sample_piecewise(rng).0
    }

    fn argmax(&mut self) -> (Configuration, f64) {
        PiecewiseProposal::argmax(self)
    }

    fn log_q(&self, x: &Configuration) -> f64 {
        PiecewiseProposal::log_q(self, x)
    }

    fn log_mass(&mut self) -> f64 {
        self.total_mass_log
    }

    fn log_max(&mut self) -> f64 {
        PiecewiseProposal::log_max(self)
    }

    /// A leaf scan plus one downward pass.
    fn trial_work(&self) -> f64 {
        (self.leaf_count() + self.model.num_nodes()) as f64
    }
}
