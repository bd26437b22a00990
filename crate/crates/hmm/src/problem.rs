use std::sync::Arc;

use osstar_core::Target;

use crate::backoff::MaxBackoffTables;
use crate::error::HmmError;
use crate::keypad::TokenLattice;
use crate::lm::{NGramLM, WordId};

/// A word sequence, one word id per lattice position.
pub type Sentence = Vec<WordId>;

/// The decoding target `p(x) = Π_i p_lm(x_i | history) p_obs(o_i | x_i)`
/// with the lattice resolved to model word ids.
#[derive(Debug, Clone)]
pub struct HmmProblem {
    tables: Arc<MaxBackoffTables>,
    /// Per position, `(word, ln p_obs)` sorted by word id.
    candidates: Arc<Vec<Vec<(WordId, f64)>>>,
}

impl HmmProblem {
    pub fn new(tables: Arc<MaxBackoffTables>, lattice: &TokenLattice) -> Result<Self, HmmError> {
        let lm = tables.lm().clone();
        let mut candidates = Vec::with_capacity(lattice.len());
        for cands in lattice.positions() {
            let mut row = Vec::with_capacity(cands.len());
            for c in cands {
                let id = lm
                    .id(&c.word)
                    .filter(|id| tables.alphabet().binary_search(id).is_ok())
                    .ok_or_else(|| HmmError::UnknownWord(c.word.clone()))?;
                row.push((id, c.log_pobs));
            }
            row.sort_by_key(|&(id, _)| id);
            row.dedup_by_key(|&mut (id, _)| id);
            candidates.push(row);
        }
        Ok(Self {
            tables,
            candidates: Arc::new(candidates),
        })
    }

    pub fn from_lm(lm: NGramLM, lattice: &TokenLattice) -> Result<Self, HmmError> {
        let tables = Arc::new(MaxBackoffTables::build(Arc::new(lm)));
        Self::new(tables, lattice)
    }

    pub fn lm(&self) -> &NGramLM {
        self.tables.lm()
    }

    pub fn tables(&self) -> &MaxBackoffTables {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self, position: usize) -> &[(WordId, f64)] {
        &self.candidates[position]
    }

    pub fn log_pobs(&self, position: usize, word: WordId) -> Option<f64> {
        let row = &self.candidates[position];
        row.binary_search_by_key(&word, |&(id, _)| id).ok().map(|i| row[i].1)
    }

    pub fn configuration_count(&self) -> u128 {
        self.candidates.iter().map(|c| c.len() as u128).product()
    }

    /// `<s> x_0 .. x_{i-1}`, keeping the last `order - 1` tokens.
    pub fn history(&self, x: &[WordId], position: usize) -> Vec<WordId> {
        let keep = self.lm().order() - 1;
        let mut h = Vec::with_capacity(position + 1);
        h.push(self.lm().bos());
        h.extend_from_slice(&x[..position]);
        let drop = h.len().saturating_sub(keep);
        h.drain(..drop);
        h
    }

    pub fn words(&self, x: &[WordId]) -> Vec<&str> {
        x.iter().map(|&w| self.lm().word(w)).collect()
    }

    pub fn log_p(&self, x: &[WordId]) -> f64 {
        if x.len() != self.len() {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for (i, &w) in x.iter().enumerate() {
            let Some(obs) = self.log_pobs(i, w) else {
                return f64::NEG_INFINITY;
            };
            total += self.lm().cond_logprob(&self.history(x, i), w) + obs;
        }
        total
    }
}

impl Target<Sentence> for HmmProblem {
    fn log_p(&self, x: &Sentence) -> f64 {
        HmmProblem::log_p(self, x)
    }
}
