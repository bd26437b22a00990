use thiserror::Error;

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("ARPA parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("n-gram order {0} unsupported (maximum is 5)")]
    OrderUnsupported(usize),
    #[error("no vocabulary word matches observation {digits:?} at position {position}")]
    NoCandidate { position: usize, digits: String },
    #[error("word {0:?} cannot be typed on a phone keypad")]
    InvalidWord(String),
    #[error("observation {0:?} is not a string of keypad digits 2-9")]
    InvalidObservation(String),
    #[error("word {0:?} is not in the language model vocabulary")]
    UnknownWord(String),
    #[error("lattice is empty")]
    EmptyLattice,
    #[error("every position of the rejected path already uses a full-order context")]
    NoRefinementAvailable,
}
