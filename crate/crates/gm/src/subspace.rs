//! Spanning-tree upper bounds on a subspace fixed by partial evidence.
//!
//! On the reduced graph (conditioned nodes removed), edges to conditioned
//! neighbors fold into unaries, tree edges stay exact and every other edge
//! is replaced by its maximum entry. The result factorizes over a forest, so
//! its mass, maximum and samples come from tree dynamic programming.

use osstar_core::logspace::log_sum_exp;
use osstar_core::EngineRng;
use rand::Rng;

use crate::model::{Configuration, PairwiseModel};

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SubspaceProposal {
    evidence: Vec<Option<usize>>,
    tree: Vec<usize>,
    /// Conditioned unaries, edges among conditioned nodes and off-tree maxima.
    constant: f64,
    /// Per free node; empty for conditioned nodes.
    unary: Vec<Vec<f64>>,
    /// Free nodes, each after its tree parent.
    order: Vec<usize>,
    /// Tree parent and the connecting edge.
    parent: Vec<Option<(usize, usize)>>,
    sum_belief: Vec<Vec<f64>>,
    max_belief: Vec<Vec<f64>>,
    log_mass: f64,
    log_max: f64,
    work: f64,
}

impl SubspaceProposal {
    /// Builds the bound for `evidence` using the reduced-graph forest `tree`.
    pub fn build(model: &PairwiseModel, evidence: Vec<Option<usize>>, tree: Vec<usize>) -> Self {
        let n = model.num_nodes();
        let free = |v: usize| evidence[v].is_none();
        let mut in_tree = vec![false; model.edges().len()];
        for &e in &tree {
            in_tree[e] = true;
        }
        let mut constant = 0.0;
        let mut unary: Vec<Vec<f64>> = vec![Vec::new(); n];
        for v in 0..n {
            match evidence[v] {
                Some(x) => constant += model.log_psi(v)[x],
                None => unary[v] = model.log_psi(v).to_vec(),
            }
        }
        let mut reduced_edges = 0usize;
        for (id, e) in model.edges().iter().enumerate() {
            match (evidence[e.u], evidence[e.v]) {
                (Some(a), Some(b)) => constant += e.log_phi[a][b],
                (Some(a), None) => {
                    for (b, u) in unary[e.v].iter_mut().enumerate() {
                        *u += e.log_phi[a][b];
                    }
                }
                (None, Some(b)) => {
                    for (a, u) in unary[e.u].iter_mut().enumerate() {
                        *u += e.log_phi[a][b];
                    }
                }
                (None, None) => {
                    reduced_edges += 1;
                    if !in_tree[id] {
                        constant += e.log_max;
                    }
                }
            }
        }
        // Orient the forest: each component is rooted at its smallest node.
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::new();
        for root in 0..n {
            if !free(root) || seen[root] {
                continue;
            }
            seen[root] = true;
            let mut head = order.len();
            order.push(root);
            while head < order.len() {
                let node = order[head];
                head += 1;
                for &e in model.incident(node) {
                    if !in_tree[e] {
                        continue;
                    }
                    let other = model.edge(e).other(node);
                    if !seen[other] {
                        seen[other] = true;
                        parent[other] = Some((node, e));
                        order.push(other);
                    }
                }
            }
        }
        let free_count = order.len();
        let mut out = Self {
            evidence,
            tree,
            constant,
            unary,
            order,
            parent,
            sum_belief: Vec::new(),
            max_belief: Vec::new(),
            log_mass: 0.0,
            log_max: 0.0,
            work: (free_count + reduced_edges) as f64,
        };
        out.sum_belief = out.upward(model, &[], log_sum_exp);
        out.max_belief = out.upward(model, &[], max_of);
        out.log_mass = out.root_total(&out.sum_belief, log_sum_exp);
        out.log_max = out.root_total(&out.max_belief, max_of);
        out
    }

    /// Unaries plus messages from children, leaves first. `clamp` restricts
    /// free nodes to a single value.
    fn upward(
        &self,
        model: &PairwiseModel,
        clamp: &[Option<usize>],
        combine: fn(Vec<f64>) -> f64,
    ) -> Vec<Vec<f64>> {
        let mut belief = self.unary.clone();
        for (v, c) in clamp.iter().enumerate() {
            if let Some(x) = *c {
                for (k, b) in belief[v].iter_mut().enumerate() {
                    if k != x {
                        *b = f64::NEG_INFINITY;
                    }
                }
            }
        }
        for &child in self.order.iter().rev() {
            let Some((par, e)) = self.parent[child] else {
                continue;
            };
            let edge = model.edge(e);
            for a in 0..belief[par].len() {
                let msg = combine(
                    (0..belief[child].len())
                        .map(|b| belief[child][b] + edge.value_from(child, b, a))
                        .collect(),
                );
                belief[par][a] += msg;
            }
        }
        belief
    }

    fn root_total(&self, belief: &[Vec<f64>], combine: fn(Vec<f64>) -> f64) -> f64 {
        self.constant
            + self
                .order
                .iter()
                .filter(|&&v| self.parent[v].is_none())
                .map(|&r| combine(belief[r].clone()))
                .sum::<f64>()
    }

    pub fn evidence(&self) -> &[Option<usize>] {
        &self.evidence
    }

    /// Tree edges of the reduced graph, sorted.
    pub fn tree(&self) -> &[usize] {
        &self.tree
    }

    /// Free nodes in increasing id order.
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.evidence.len()).filter(|&v| self.evidence[v].is_none()).collect()
    }

    pub fn contains(&self, x: &[usize]) -> bool {
        x.len() == self.evidence.len() && self.evidence.iter().zip(x).all(|(e, &v)| e.is_none_or(|e| e == v))
    }

    /// `ln Q(subspace)`.
    pub fn log_mass(&self) -> f64 {
        self.log_mass
    }

    /// `ln max q` over the subspace.
    pub fn log_max(&self) -> f64 {
        self.log_max
    }

    /// Work units spent building this bound.
    pub fn work(&self) -> f64 {
        self.work
    }

    /// `ln q(x)`; `-inf` outside the subspace.
    pub fn log_q(&self, model: &PairwiseModel, x: &[usize]) -> f64 {
        if !self.contains(x) || x.iter().enumerate().any(|(v, &k)| k >= model.domain(v)) {
            return f64::NEG_INFINITY;
        }
        let mut total = self.constant;
        for &v in &self.order {
            total += self.unary[v][x[v]];
        }
        for &e in &self.tree {
            let edge = model.edge(e);
            total += edge.log_phi[x[edge.u]][x[edge.v]];
        }
        total
    }

    /// Draws `x` with probability `q(x) / Q(subspace)`.
    pub fn sample(&self, model: &PairwiseModel, rng: &mut EngineRng) -> Configuration {
        let mut x: Vec<usize> = self.evidence.iter().map(|e| e.unwrap_or(0)).collect();
        for &v in &self.order {
            let weights: Vec<f64> = match self.parent[v] {
                None => self.sum_belief[v].clone(),
                Some((par, e)) => {
                    let edge = model.edge(e);
                    (0..self.sum_belief[v].len())
                        .map(|b| self.sum_belief[v][b] + edge.value_from(v, b, x[par]))
                        .collect()
                }
            };
            x[v] = draw(&weights, rng);
        }
        x
    }

    /// The lexicographically smallest maximizer of `q` and `ln q` there.
    pub fn argmax(&self, model: &PairwiseModel) -> (Configuration, f64) {
        let mut clamp: Vec<Option<usize>> = vec![None; self.evidence.len()];
        let best = self.log_max;
        let tol = TIE_TOLERANCE * best.abs().max(1.0);
        for v in self.free_nodes() {
            for k in 0..model.domain(v) {
                clamp[v] = Some(k);
                let belief = self.upward(model, &clamp, max_of);
                if self.root_total(&belief, max_of) >= best - tol {
                    break;
                }
            }
        }
        let x: Configuration = self
            .evidence
            .iter()
            .zip(&clamp)
            .map(|(e, c)| e.or(*c).expect("every node assigned"))
            .collect();
        let lq = self.log_q(model, &x);
        (x, lq)
    }
}

fn max_of(values: Vec<f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Index drawn with probability proportional to `exp(weights)`.
pub(crate) fn draw(weights: &[f64], rng: &mut EngineRng) -> usize {
    let total = log_sum_exp(weights.iter().copied());
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += (w - total).exp();
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > f64::NEG_INFINITY).unwrap_or(0)
}
