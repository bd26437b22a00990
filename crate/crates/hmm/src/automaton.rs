//! The variable-order q-automaton: a layered weighted automaton whose states
//! at position `i` are context suffixes, and whose edge weights are
//! max-backoffs of the longest refined n-gram matching the state.

use std::collections::{BTreeSet, HashMap};

use osstar_core::logspace::log_sum_exp;
use osstar_core::{EngineRng, Proposal};
use rand::Rng;

use crate::error::HmmError;
use crate::lm::WordId;
use crate::problem::{HmmProblem, Sentence};

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Edge {
    log_w: f64,
    next: usize,
}

#[derive(Debug, Clone)]
struct Layer {
    states: Vec<Vec<WordId>>,
    index: HashMap<Vec<WordId>, usize>,
    /// Refined n-grams: context (non-empty) -> words. Unigrams are implicit.
    ngrams: HashMap<Vec<WordId>, BTreeSet<WordId>>,
    /// `states.len() * candidates` edges, row-major by state.
    edges: Vec<Edge>,
}

impl Layer {
    fn empty() -> Self {
        let root: Vec<WordId> = Vec::new();
        Self {
            states: vec![root.clone()],
            index: HashMap::from([(root, 0)]),
            ngrams: HashMap::new(),
            edges: Vec::new(),
        }
    }

    fn has_ngram(&self, context: &[WordId], word: WordId) -> bool {
        self.ngrams.get(context).is_some_and(|ws| ws.contains(&word))
    }
}

/// One context extension along a rejected path.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextExtension {
    pub position: usize,
    /// The n-gram context currently used at `position`.
    pub context: Vec<WordId>,
    /// `context` with one more preceding token.
    pub extended: Vec<WordId>,
    pub word: WordId,
    /// `ln v(word | context) - ln v(word | extended)`.
    pub gap: f64,
    /// `ln v(word | context) - ln p_lm(word | full history)`.
    pub remaining: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionCriterion {
    /// Pick the extension lowering `q` most at the rejected point.
    PointwiseGap,
    /// Pick the extension with the smallest resulting `Q(X)` (sampling) or
    /// `max q` (optimization).
    Norm,
}

#[derive(Debug, Clone)]
pub struct QAutomaton {
    problem: HmmProblem,
    layers: Vec<Layer>,
    /// `sum_back[i][s]`: log total weight of paths from state `s` at
    /// position `i` to the final state. `sum_back[len] = [0]`.
    sum_back: Vec<Vec<f64>>,
    max_back: Vec<Vec<f64>>,
    edges_dirty: Vec<bool>,
    /// Backward tables are stale for layers `0..=k`.
    back_stale: Option<usize>,
    recomputations: usize,
}

impl QAutomaton {
    /// The unigram proposal `q0(x) = Π_i v_1(x_i) p_obs(o_i | x_i)`.
    pub fn q0(problem: &HmmProblem) -> Self {
        let len = problem.len();
        assert!(len > 0, "automaton needs at least one position");
        let mut sum_back = vec![Vec::new(); len + 1];
        sum_back[len] = vec![0.0];
        Self {
            problem: problem.clone(),
            layers: vec![Layer::empty(); len],
            max_back: sum_back.clone(),
            sum_back,
            edges_dirty: vec![true; len],
            back_stale: Some(len - 1),
            recomputations: 0,
        }
    }

    pub fn problem(&self) -> &HmmProblem {
        &self.problem
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Number of times the dynamic-programming tables were rebuilt.
    pub fn recomputations(&self) -> usize {
        self.recomputations
    }

    pub fn states(&self, position: usize) -> &[Vec<WordId>] {
        &self.layers[position].states
    }

    fn order(&self) -> usize {
        self.problem.lm().order()
    }

    fn start_state(&self) -> usize {
        let bos = [self.problem.lm().bos()];
        self.layers[0].index.get(&bos[..]).copied().unwrap_or(0)
    }

    /// Longest suffix of `state` carrying a refined n-gram for `word`.
    fn used_context<'a>(&self, position: usize, state: &'a [WordId], word: WordId) -> &'a [WordId] {
        let layer = &self.layers[position];
        for l in (1..=state.len()).rev() {
            let suffix = &state[state.len() - l..];
            if layer.has_ngram(suffix, word) {
                return suffix;
            }
        }
        &state[..0]
    }

    /// State at `position + 1` reached from `state` by reading `word`.
    fn route(&self, position: usize, state: &[WordId], word: WordId) -> usize {
        if position + 1 == self.len() {
            return 0;
        }
        let keep = self.order() - 1;
        let mut buf = Vec::with_capacity(state.len() + 1);
        buf.extend_from_slice(state);
        buf.push(word);
        let next = &self.layers[position + 1];
        for l in (1..=buf.len().min(keep)).rev() {
            if let Some(&s) = next.index.get(&buf[buf.len() - l..]) {
                return s;
            }
        }
        0
    }

    fn edge_weight(&self, position: usize, state: &[WordId], word: WordId, log_pobs: f64) -> f64 {
        let ctx = self.used_context(position, state, word);
        self.problem.tables().value(word, ctx) + log_pobs
    }

    fn rebuild_edges(&mut self, position: usize) {
        let cands = self.problem.candidates(position);
        let layer = &self.layers[position];
        let mut edges = Vec::with_capacity(layer.states.len() * cands.len());
        for state in &layer.states {
            for &(w, obs) in cands {
                edges.push(Edge {
                    log_w: self.edge_weight(position, state, w, obs),
                    next: self.route(position, state, w),
                });
            }
        }
        self.layers[position].edges = edges;
    }

    fn refresh(&mut self) {
        let Some(stale) = self.back_stale else {
            return;
        };
        for i in 0..self.len() {
            if self.edges_dirty[i] {
                self.rebuild_edges(i);
                self.edges_dirty[i] = false;
            }
        }
        for i in (0..=stale).rev() {
            let k = self.problem.candidates(i).len();
            let layer = &self.layers[i];
            let mut sums = Vec::with_capacity(layer.states.len());
            let mut maxes = Vec::with_capacity(layer.states.len());
            for row in layer.edges.chunks(k) {
                sums.push(log_sum_exp(row.iter().map(|e| e.log_w + self.sum_back[i + 1][e.next])));
                maxes.push(
                    row.iter()
                        .map(|e| e.log_w + self.max_back[i + 1][e.next])
                        .fold(f64::NEG_INFINITY, f64::max),
                );
            }
            self.sum_back[i] = sums;
            self.max_back[i] = maxes;
        }
        self.back_stale = None;
        self.recomputations += 1;
    }

    fn mark_dirty(&mut self, position: usize) {
        self.edges_dirty[position] = true;
        self.back_stale = Some(self.back_stale.map_or(position, |s| s.max(position)));
    }

    fn ensure_state(&mut self, position: usize, context: &[WordId]) {
        if self.layers[position].index.contains_key(context) {
            return;
        }
        let layer = &mut self.layers[position];
        layer.index.insert(context.to_vec(), layer.states.len());
        layer.states.push(context.to_vec());
        self.mark_dirty(position);
        if position > 0 {
            self.mark_dirty(position - 1);
            // The state must be reachable: its prefix lives one layer back.
            let prefix = &context[..context.len() - 1];
            if !prefix.is_empty() {
                self.ensure_state(position - 1, prefix);
            }
        }
    }

    /// Adds the n-gram `context -> word` at `position`.
    pub fn add_ngram(&mut self, position: usize, context: &[WordId], word: WordId) {
        assert!(!context.is_empty(), "unigrams are always present");
        self.layers[position]
            .ngrams
            .entry(context.to_vec())
            .or_default()
            .insert(word);
        self.ensure_state(position, context);
        self.mark_dirty(position);
    }

    /// States visited by `x`, the n-gram context used at each position, and `ln q(x)`.
    fn walk(&self, x: &[WordId]) -> Option<(Vec<usize>, Vec<usize>, f64)> {
        if x.len() != self.len() {
            return None;
        }
        let mut state = self.start_state();
        let mut states = Vec::with_capacity(x.len());
        let mut used = Vec::with_capacity(x.len());
        let mut total = 0.0;
        for (i, &w) in x.iter().enumerate() {
            let obs = self.problem.log_pobs(i, w)?;
            let ctx = &self.layers[i].states[state];
            states.push(state);
            used.push(self.used_context(i, ctx, w).len());
            total += self.edge_weight(i, ctx, w, obs);
            state = self.route(i, ctx, w);
        }
        Some((states, used, total))
    }

    pub fn log_q(&self, x: &[WordId]) -> f64 {
        self.walk(x).map_or(f64::NEG_INFINITY, |(_, _, lq)| lq)
    }

    /// `ln Q(X)`, the sum-product aggregate at the start state.
    pub fn log_mass(&mut self) -> f64 {
        self.refresh();
        self.sum_back[0][self.start_state()]
    }

    /// `ln max_x q(x)`, the max-product aggregate at the start state.
    pub fn log_max(&mut self) -> f64 {
        self.refresh();
        self.max_back[0][self.start_state()]
    }

    /// Highest-weight sentence; ties go to the lexicographically smallest.
    pub fn viterbi(&mut self) -> (Sentence, f64) {
        self.refresh();
        let mut state = self.start_state();
        let mut x = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let cands = self.problem.candidates(i);
            let row = &self.layers[i].edges[state * cands.len()..(state + 1) * cands.len()];
            let best = self.max_back[i][state];
            let tol = TIE_TOLERANCE * best.abs().max(1.0);
            let j = row
                .iter()
                .position(|e| e.log_w + self.max_back[i + 1][e.next] >= best - tol)
                .expect("some edge attains the maximum");
            x.push(cands[j].0);
            state = row[j].next;
        }
        let lq = self.log_q(&x);
        (x, lq)
    }

    /// Draws a sentence with probability `q(x) / Q(X)` by forward sampling
    /// over the backward sum-product aggregates.
    pub fn sample_path(&mut self, rng: &mut EngineRng) -> Sentence {
        self.refresh();
        let mut state = self.start_state();
        let mut x = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let cands = self.problem.candidates(i);
            let row = &self.layers[i].edges[state * cands.len()..(state + 1) * cands.len()];
            let total = self.sum_back[i][state];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = row.len() - 1;
            for (j, e) in row.iter().enumerate() {
                acc += (e.log_w + self.sum_back[i + 1][e.next] - total).exp();
                if u < acc {
                    pick = j;
                    break;
                }
            }
            // Guard against rounding leaving the tail on a zero-weight edge.
            while row[pick].log_w + self.sum_back[i + 1][row[pick].next] == f64::NEG_INFINITY && pick > 0 {
                pick -= 1;
            }
            x.push(cands[pick].0);
            state = row[pick].next;
        }
        x
    }

    /// Every one-order context extension available along `x`.
    pub fn extensions(&self, x: &[WordId]) -> Vec<ContextExtension> {
        let Some((states, used, _)) = self.walk(x) else {
            return Vec::new();
        };
        let tables = self.problem.tables();
        let mut out = Vec::new();
        for (i, &w) in x.iter().enumerate() {
            let state = &self.layers[i].states[states[i]];
            let ctx = &state[state.len() - used[i]..];
            if tables.is_complete(ctx) {
                continue;
            }
            let history = self.problem.history(x, i);
            let mut extended = Vec::with_capacity(ctx.len() + 1);
            extended.push(history[history.len() - ctx.len() - 1]);
            extended.extend_from_slice(ctx);
            let current = tables.value(w, ctx);
            out.push(ContextExtension {
                position: i,
                context: ctx.to_vec(),
                gap: current - tables.value(w, &extended),
                remaining: current - self.problem.lm().cond_logprob(&history, w),
                extended,
                word: w,
            });
        }
        out
    }

    /// Applies one context extension chosen along the rejected sentence.
    ///
    /// Only positions where the bound is still loose are considered; among
    /// them the largest one-order gap wins, leftmost on ties.
    pub fn refine(
        &mut self,
        rejected: &[WordId],
        criterion: SelectionCriterion,
        optimizing: bool,
    ) -> Result<ContextExtension, HmmError> {
        let options: Vec<ContextExtension> =
            self.extensions(rejected).into_iter().filter(|e| e.remaining > 0.0).collect();
        if options.is_empty() {
            return Err(HmmError::NoRefinementAvailable);
        }
        let choice = match criterion {
            SelectionCriterion::PointwiseGap => {
                let mut best = &options[0];
                for o in &options[1..] {
                    if o.gap > best.gap {
                        best = o;
                    }
                }
                best.clone()
            }
            SelectionCriterion::Norm => {
                let mut best: Option<(f64, &ContextExtension)> = None;
                for o in &options {
                    let mut trial = self.clone();
                    trial.add_ngram(o.position, &o.extended, o.word);
                    let norm = if optimizing {
                        trial.log_max()
                    } else {
                        trial.log_mass()
                    };
                    if best.is_none_or(|(b, _)| norm < b) {
                        best = Some((norm, o));
                    }
                }
                best.expect("options is non-empty").1.clone()
            }
        };
        self.add_ngram(choice.position, &choice.extended, choice.word);
        Ok(choice)
    }

    /// Number of distinct `(position, context, word)` weights of each order
    /// `1..=n` carried by the automaton.
    pub fn ngram_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.order()];
        for (i, layer) in self.layers.iter().enumerate() {
            counts[0] += self.problem.candidates(i).len();
            for (ctx, words) in &layer.ngrams {
                counts[ctx.len()] += words.len();
            }
        }
        counts
    }

    /// Number of automaton edges whose weight is an n-gram of each order
    /// `1..=n`.
    pub fn edge_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.order()];
        for (i, layer) in self.layers.iter().enumerate() {
            for state in &layer.states {
                for &(w, _) in self.problem.candidates(i) {
                    counts[self.used_context(i, state, w).len()] += 1;
                }
            }
        }
        counts
    }

    /// Number of context states of each suffix length `0..n`.
    pub fn context_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.order()];
        for layer in &self.layers {
            for s in &layer.states {
                counts[s.len()] += 1;
            }
        }
        counts
    }
}

impl Proposal for QAutomaton {
    type Config = Sentence;

    fn sample(&mut self, rng: &mut EngineRng) -> Sentence {
        self.sample_path(rng)
    }

    fn argmax(&mut self) -> (Sentence, f64) {
        self.viterbi()
    }

    fn log_q(&self, x: &Sentence) -> f64 {
        QAutomaton::log_q(self, x)
    }

    fn log_mass(&mut self) -> f64 {
        QAutomaton::log_mass(self)
    }

    fn log_max(&mut self) -> f64 {
        QAutomaton::log_max(self)
    }
}
