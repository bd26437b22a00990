//! Exhaustive enumeration over small lattices.

use osstar_core::logspace::log_sum_exp;

use crate::problem::{HmmProblem, Sentence};

/// Every sentence the lattice admits, in lexicographic order.
pub fn enumerate(problem: &HmmProblem) -> Vec<Sentence> {
    let mut out = vec![Vec::new()];
    for i in 0..problem.len() {
        let mut next = Vec::with_capacity(out.len() * problem.candidates(i).len());
        for prefix in &out {
            for &(w, _) in problem.candidates(i) {
                let mut s = prefix.clone();
                s.push(w);
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// `ln Σ_x f(x)` over every admitted sentence.
pub fn log_total(problem: &HmmProblem, f: impl Fn(&Sentence) -> f64) -> f64 {
    log_sum_exp(enumerate(problem).iter().map(f))
}

/// The maximizer of `f`, smallest sentence on ties.
pub fn argmax(problem: &HmmProblem, f: impl Fn(&Sentence) -> f64) -> (Sentence, f64) {
    let mut best: Option<(Sentence, f64)> = None;
    for x in enumerate(problem) {
        let v = f(&x);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((x, v));
        }
    }
    best.expect("lattice is non-empty")
}
