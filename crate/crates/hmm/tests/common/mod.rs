#![allow(dead_code)]

use std::collections::HashMap;

use osstar_hmm::lm::{NGramEntry, NGramLM};
use osstar_hmm::synthetic::{random_lm, SyntheticConfig};
use osstar_hmm::{HmmProblem, Sentence, TokenLattice};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn words(n: usize) -> Vec<String> {
    ["a", "b", "c", "d", "e", "f"][..n].iter().map(|s| s.to_string()).collect()
}

/// A random backoff model with strongly varying higher orders, so bounds are loose.
pub fn harsh_lm(seed: u64, vocab: usize, order: usize) -> NGramLM {
    let config = SyntheticConfig {
        order,
        context_rate: vec![0.8, 0.7, 0.6, 0.5],
        context_sigma: vec![1.5, 1.5, 1.5, 1.5],
        max_explicit: vocab,
        ..SyntheticConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_lm(&words(vocab), &config, &mut rng).unwrap()
}

pub fn uniform_problem(lm: NGramLM, vocab: usize, len: usize) -> HmmProblem {
    let lattice = TokenLattice::uniform(&words(vocab), len).unwrap();
    HmmProblem::from_lm(lm, &lattice).unwrap()
}

pub fn entry(words: &[&str], p: f64, bow: f64) -> NGramEntry {
    NGramEntry {
        words: words.iter().map(|s| s.to_string()).collect(),
        logprob: p.ln(),
        backoff: bow.ln(),
    }
}

/// Every sentence over the problem's candidates, in lexicographic order.
pub fn all_sentences(problem: &HmmProblem) -> Vec<Sentence> {
    let mut out: Vec<Sentence> = vec![Vec::new()];
    for i in 0..problem.len() {
        out = out
            .into_iter()
            .flat_map(|s| {
                problem.candidates(i).iter().map(move |&(w, _)| {
                    let mut t = s.clone();
                    t.push(w);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn log_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn total_variation(counts: &HashMap<Sentence, usize>, probs: &HashMap<Sentence, f64>) -> f64 {
    let n: usize = counts.values().sum();
    let mut tv = 0.0;
    for (x, p) in probs {
        let f = *counts.get(x).unwrap_or(&0) as f64 / n as f64;
        tv += (f - p).abs();
    }
    tv / 2.0
}
