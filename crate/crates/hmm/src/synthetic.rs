//! Random backoff language models and keypad decoding instances.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::HmmError;
use crate::keypad::{build_lattice, encode, key_letters, TokenLattice};
use crate::lm::{NGramEntry, NGramLM, BOS};
use crate::problem::{HmmProblem, Sentence};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub order: usize,
    /// Distinct digit strings in the vocabulary.
    pub codes: usize,
    /// Words typed by each digit string.
    pub words_per_code: usize,
    pub code_len: usize,
    pub dirichlet_alpha: f64,
    /// Probability that an entry of order `k - 1` gains explicit `k`-grams,
    /// indexed by `k - 2`.
    pub context_rate: Vec<f64>,
    /// Standard deviation of the log-scale deviation of a `k`-gram from its
    /// backoff estimate, indexed by `k - 2`. Smaller values at higher orders
    /// mimic smoothing that shrinks sparse contexts toward their suffix.
    pub context_sigma: Vec<f64>,
    /// Largest explicit word set per context.
    pub max_explicit: usize,
    pub sentence_len: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            order: 5,
            codes: 8,
            words_per_code: 6,
            code_len: 2,
            dirichlet_alpha: 0.3,
            context_rate: vec![0.6, 0.4, 0.3, 0.25],
            context_sigma: vec![0.5, 0.25, 0.12, 0.06],
            max_explicit: 12,
            sentence_len: 6,
            epsilon: 0.05,
            seed: 0,
        }
    }
}

/// Words sharing keypad codes: `codes` digit strings, each typed by
/// `words_per_code` distinct words.
pub fn keypad_vocabulary(codes: usize, words_per_code: usize, code_len: usize, rng: &mut impl Rng) -> Vec<String> {
    let digits: Vec<char> = ('2'..='9').collect();
    let mut seen_codes = BTreeSet::new();
    let mut words = BTreeSet::new();
    while seen_codes.len() < codes {
        let code: String = (0..code_len).map(|_| *digits.choose(rng).expect("digits")).collect();
        let capacity: usize = code.chars().map(|d| key_letters(d).len()).product();
        if capacity < words_per_code || !seen_codes.insert(code.clone()) {
            continue;
        }
        let mut these = BTreeSet::new();
        while these.len() < words_per_code {
            let w: String = code
                .chars()
                .map(|d| {
                    let letters: Vec<char> = key_letters(d).chars().collect();
                    *letters.choose(rng).expect("letters")
                })
                .collect();
            these.insert(w);
        }
        words.extend(these);
    }
    words.into_iter().collect()
}

fn dirichlet(k: usize, alpha: f64, rng: &mut impl Rng) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(alpha, 1.0).expect("valid Gamma parameters");
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    let raw: Vec<f64> = draws.iter().map(|g| g / sum.max(f64::MIN_POSITIVE)).collect();
    // Keep every probability strictly positive.
    let floor = 1e-6;
    let total: f64 = raw.iter().map(|p| p + floor).sum();
    raw.iter().map(|p| (p + floor) / total).collect()
}

/// A random backoff model of the given order over `words`.
///
/// Each listed context receives a random explicit word set whose
/// probabilities perturb the lower-order estimate by a log-normal factor; its
/// backoff weight spreads the rest over the lower-order distribution, so
/// every conditional is normalized.
pub fn random_lm(words: &[String], config: &SyntheticConfig, rng: &mut impl Rng) -> Result<NGramLM, HmmError> {
    let unigram = dirichlet(words.len(), config.dirichlet_alpha, rng);
    let mut entries: Vec<NGramEntry> = words
        .iter()
        .zip(&unigram)
        .map(|(w, p)| NGramEntry {
            words: vec![w.clone()],
            logprob: p.ln(),
            backoff: 0.0,
        })
        .collect();
    entries.push(NGramEntry {
        words: vec![BOS.to_string()],
        logprob: -99.0 * std::f64::consts::LN_10,
        backoff: 0.0,
    });
    for k in 2..=config.order {
        let lower = NGramLM::from_entries(k - 1, &entries)?;
        let rate = config.context_rate.get(k - 2).copied().unwrap_or(0.0);
        let mut added = Vec::new();
        for idx in 0..entries.len() {
            let ctx_words = &entries[idx].words;
            if ctx_words.len() != k - 1 || ctx_words[1..].iter().any(|w| w == BOS) {
                continue;
            }
            if !rng.random_bool(rate) {
                continue;
            }
            let ctx: Vec<_> = ctx_words.iter().map(|w| lower.id(w).expect("listed word")).collect();
            let size = rng.random_range(1..=config.max_explicit.min(words.len()));
            let mut chosen: Vec<&String> = words.iter().collect();
            chosen.shuffle(rng);
            chosen.truncate(size);
            chosen.sort();
            let sigma = config.context_sigma.get(k - 2).copied().unwrap_or(0.0);
            let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
            let ids: Vec<_> = chosen.iter().map(|w| lower.id(w).expect("listed word")).collect();
            let lower_probs: Vec<f64> = ids.iter().map(|&id| lower.cond_logprob(&ctx, id).exp()).collect();
            let lower_mass: f64 = lower_probs.iter().sum();
            let mut probs: Vec<f64> = lower_probs.iter().map(|p| p * noise.sample(rng).exp()).collect();
            let mut mass: f64 = probs.iter().sum();
            let cap = if size == words.len() {
                1.0
            } else {
                1.0 - 0.1 * (1.0 - lower_mass)
            };
            if size == words.len() || mass > cap {
                probs.iter_mut().for_each(|p| *p *= cap / mass);
                mass = cap;
            }
            for (w, p) in chosen.iter().zip(&probs) {
                let mut ngram = ctx_words.clone();
                ngram.push((*w).clone());
                added.push(NGramEntry {
                    words: ngram,
                    logprob: p.ln(),
                    backoff: 0.0,
                });
            }
            if size < words.len() {
                entries[idx].backoff = ((1.0 - mass) / (1.0 - lower_mass).max(1e-12)).ln();
            }
        }
        entries.extend(added);
    }
    NGramLM::from_entries(config.order, &entries)
}

/// Draws a sentence of `len` words from the model, starting after `<s>`.
pub fn sample_sentence(lm: &NGramLM, len: usize, rng: &mut impl Rng) -> Sentence {
    let alphabet = lm.alphabet();
    let mut x: Sentence = Vec::with_capacity(len);
    for _ in 0..len {
        let mut history = vec![lm.bos()];
        history.extend_from_slice(&x);
        let weights: Vec<f64> = alphabet.iter().map(|&w| lm.cond_logprob(&history, w).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = alphabet[alphabet.len() - 1];
        for (&w, p) in alphabet.iter().zip(&weights) {
            if u < *p {
                pick = w;
                break;
            }
            u -= p;
        }
        x.push(pick);
    }
    x
}

/// A keypad decoding instance: a model, the sentence the user meant and the
/// digit strings they typed.
#[derive(Debug, Clone)]
pub struct SmsInstance {
    pub lm: NGramLM,
    pub vocab: Vec<String>,
    pub truth: Vec<String>,
    pub observations: Vec<String>,
    pub lattice: TokenLattice,
}

impl SmsInstance {
    pub fn generate(config: &SyntheticConfig) -> Result<Self, HmmError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let vocab = keypad_vocabulary(config.codes, config.words_per_code, config.code_len, &mut rng);
        let lm = random_lm(&vocab, config, &mut rng)?;
        Self::from_lm(lm, vocab, config.sentence_len, config.epsilon, &mut rng)
    }

    pub fn from_lm(
        lm: NGramLM,
        vocab: Vec<String>,
        len: usize,
        epsilon: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, HmmError> {
        let truth: Vec<String> = sample_sentence(&lm, len, rng)
            .iter()
            .map(|&w| lm.word(w).to_string())
            .collect();
        let observations = truth.iter().map(|w| encode(w)).collect::<Result<Vec<_>, _>>()?;
        let lattice = build_lattice(&observations, &vocab, epsilon)?;
        Ok(Self {
            lm,
            vocab,
            truth,
            observations,
            lattice,
        })
    }

    /// The same typed digits under a lower-order truncation of the model.
    pub fn with_order(&self, order: usize) -> Result<Self, HmmError> {
        Ok(Self {
            lm: self.lm.truncated(order)?,
            ..self.clone()
        })
    }

    pub fn problem(&self) -> Result<HmmProblem, HmmError> {
        HmmProblem::from_lm(self.lm.clone(), &self.lattice)
    }
}
