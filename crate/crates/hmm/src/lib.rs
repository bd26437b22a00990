//! Exact decoding and sampling for high-order HMMs whose transitions come
//! from a backoff n-gram language model.
//!
//! The proposal is a layered weighted automaton ([`QAutomaton`]) that starts
//! as a unigram model with optimistic max-backoff weights and grows longer
//! contexts only where rejected sentences show they matter.

pub mod automaton;
pub mod backoff;
pub mod error;
pub mod keypad;
pub mod lm;
pub mod oracle;
pub mod problem;
pub mod refiner;
pub mod synthetic;

pub use automaton::{ContextExtension, QAutomaton, SelectionCriterion};
pub use backoff::MaxBackoffTables;
pub use error::HmmError;
pub use keypad::{build_lattice, encode, Candidate, TokenLattice};
pub use lm::{NGramEntry, NGramLM, WordId};
pub use problem::{HmmProblem, Sentence};
pub use refiner::ContextRefiner;
pub use synthetic::{SmsInstance, SyntheticConfig};
