//! Optimistic "max-backoff" weights.
//!
//! `value(w, c)` is the largest `p_lm(w | c')` over every complete context
//! `c'` that ends with `c`. A context is complete when it has `order - 1`
//! tokens or starts with `<s>` (nothing precedes the sentence start). A
//! sentence prefix therefore always scores at most the max-backoff of any
//! suffix of its history, and a complete context scores exactly `p_lm`.
//!
//! Contexts the model never lists share their backoff behaviour, so the max
//! only has to visit the suffixes of listed contexts plus one generic
//! unlisted extension.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::lm::{NGramLM, WordId};

#[derive(Debug, Clone)]
pub struct MaxBackoffTables {
    lm: Arc<NGramLM>,
    alphabet: Vec<WordId>,
    slot: Vec<Option<usize>>,
    /// Rows over `alphabet` for every incomplete context that is a suffix of
    /// some listed context (and the empty context).
    rows: HashMap<Vec<WordId>, Vec<f64>>,
}

impl MaxBackoffTables {
    pub fn build(lm: Arc<NGramLM>) -> Self {
        let alphabet = lm.alphabet();
        let mut slot = vec![None; lm.vocab().len()];
        for (i, &w) in alphabet.iter().enumerate() {
            slot[w as usize] = Some(i);
        }
        let mut tables = Self {
            lm,
            alphabet,
            slot,
            rows: HashMap::new(),
        };
        tables.fill();
        tables
    }

    fn fill(&mut self) {
        let order = self.lm.order();
        let bos = self.lm.bos();
        // Every context through which a lookup can find a listed probability
        // or backoff weight, closed under taking suffixes.
        let mut known: HashSet<Vec<WordId>> = HashSet::new();
        for key in self.lm.keys() {
            let mut add = |c: &[WordId]| {
                for start in 0..c.len() {
                    if c.len() - start < order {
                        known.insert(c[start..].to_vec());
                    }
                }
            };
            add(&key[..key.len() - 1]);
            if key.len() < order {
                add(key);
            }
        }
        let mut extensions: HashMap<Vec<WordId>, Vec<WordId>> = HashMap::new();
        for c in &known {
            if c[0] != bos && self.slot[c[0] as usize].is_some() {
                extensions.entry(c[1..].to_vec()).or_default().push(c[0]);
            }
        }
        let mut pending: Vec<Vec<WordId>> = known
            .iter()
            .filter(|c| !self.is_complete(c))
            .cloned()
            .collect();
        if order > 1 {
            pending.push(Vec::new());
        }
        // Longest first, so extensions are filled before their suffixes.
        pending.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        for c in pending {
            let exts = extensions.get(&c).map(Vec::as_slice).unwrap_or(&[]);
            let generic = exts.len() < self.alphabet.len();
            let mut with_bos = Vec::with_capacity(c.len() + 1);
            with_bos.push(bos);
            with_bos.extend_from_slice(&c);
            let mut row = Vec::with_capacity(self.alphabet.len());
            for &w in &self.alphabet {
                let mut best = self.lm.cond_logprob(&with_bos, w);
                if generic {
                    best = best.max(self.lm.cond_logprob(&c, w));
                }
                for &y in exts {
                    let mut longer = Vec::with_capacity(c.len() + 1);
                    longer.push(y);
                    longer.extend_from_slice(&c);
                    best = best.max(self.value(w, &longer));
                }
                row.push(best);
            }
            self.rows.insert(c, row);
        }
    }

    pub fn lm(&self) -> &Arc<NGramLM> {
        &self.lm
    }

    pub fn order(&self) -> usize {
        self.lm.order()
    }

    pub fn alphabet(&self) -> &[WordId] {
        &self.alphabet
    }

    /// No token can precede this context in a sentence history.
    pub fn is_complete(&self, context: &[WordId]) -> bool {
        context.len() >= self.lm.order() - 1 || context.first() == Some(&self.lm.bos())
    }

    /// `ln` of the max-backoff weight of `word` after `context`; the level is
    /// `context.len() + 1`.
    pub fn value(&self, word: WordId, context: &[WordId]) -> f64 {
        if self.is_complete(context) {
            return self.lm.cond_logprob(context, word);
        }
        match (self.rows.get(context), self.slot[word as usize]) {
            (Some(row), Some(i)) => row[i],
            // Unlisted contexts behave like their listed suffix everywhere.
            _ => self.lm.cond_logprob(context, word),
        }
    }

    /// Number of stored rows (incomplete listed contexts).
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}
