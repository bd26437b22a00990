//! Phone-keypad observation model (ITU E.161 letter groups).

use std::collections::BTreeMap;

use crate::error::HmmError;

/// Key grid positions for the letter keys 2-9.
const KEY_POS: [(u8, (i8, i8)); 8] = [
    (b'2', (0, 1)),
    (b'3', (0, 2)),
    (b'4', (1, 0)),
    (b'5', (1, 1)),
    (b'6', (1, 2)),
    (b'7', (2, 0)),
    (b'8', (2, 1)),
    (b'9', (2, 2)),
];

pub fn letter_key(c: char) -> Option<char> {
    let d = match c {
        'a'..='c' => '2',
        'd'..='f' => '3',
        'g'..='i' => '4',
        'j'..='l' => '5',
        'm'..='o' => '6',
        'p'..='s' => '7',
        't'..='v' => '8',
        'w'..='z' => '9',
        _ => return None,
    };
    Some(d)
}

pub fn key_letters(d: char) -> &'static str {
    match d {
        '2' => "abc",
        '3' => "def",
        '4' => "ghi",
        '5' => "jkl",
        '6' => "mno",
        '7' => "pqrs",
        '8' => "tuv",
        '9' => "wxyz",
        _ => "",
    }
}

/// Digit string typed for a lowercase word.
pub fn encode(word: &str) -> Result<String, HmmError> {
    if word.is_empty() {
        return Err(HmmError::InvalidWord(word.to_string()));
    }
    word.chars()
        .map(letter_key)
        .collect::<Option<String>>()
        .ok_or_else(|| HmmError::InvalidWord(word.to_string()))
}

/// Letter keys orthogonally adjacent to `d` on the keypad.
pub fn adjacent_keys(d: char) -> Vec<char> {
    let Some(&(_, (r, c))) = KEY_POS.iter().find(|(k, _)| *k as char == d) else {
        return Vec::new();
    };
    KEY_POS
        .iter()
        .filter(|(_, (r2, c2))| (r - r2).abs() + (c - c2).abs() == 1)
        .map(|(k, _)| *k as char)
        .collect()
}

/// All strings that differ from `digits` in exactly one position by an adjacent key.
pub fn one_key_neighbors(digits: &str) -> Vec<String> {
    let chars: Vec<char> = digits.chars().collect();
    let mut out = Vec::new();
    for (i, &d) in chars.iter().enumerate() {
        for n in adjacent_keys(d) {
            let mut s = chars.clone();
            s[i] = n;
            out.push(s.into_iter().collect());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub word: String,
    pub log_pobs: f64,
}

/// Per-position candidate words with their observation log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLattice {
    positions: Vec<Vec<Candidate>>,
}

impl TokenLattice {
    pub fn new(positions: Vec<Vec<Candidate>>) -> Result<Self, HmmError> {
        if positions.is_empty() {
            return Err(HmmError::EmptyLattice);
        }
        for (i, cands) in positions.iter().enumerate() {
            if cands.is_empty() {
                return Err(HmmError::NoCandidate {
                    position: i,
                    digits: String::new(),
                });
            }
            if let Some(c) = cands.iter().find(|c| c.log_pobs > 0.0 || c.log_pobs.is_nan()) {
                return Err(HmmError::InvalidObservation(format!(
                    "log p_obs of {:?} must be <= 0, got {}",
                    c.word, c.log_pobs
                )));
            }
        }
        Ok(Self { positions })
    }

    /// Every word allowed at every position with `log p_obs = 0`.
    pub fn uniform(words: &[String], len: usize) -> Result<Self, HmmError> {
        let row: Vec<Candidate> = words
            .iter()
            .map(|w| Candidate {
                word: w.clone(),
                log_pobs: 0.0,
            })
            .collect();
        Self::new(vec![row; len])
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec<Candidate>] {
        &self.positions
    }
}

/// Candidates for each observed digit string.
///
/// Words typed exactly as observed share `1 - epsilon`; the remaining
/// `epsilon` is spread evenly over the one-adjacent-key neighbor strings, and
/// each string's share is split evenly among the words that type it.
pub fn build_lattice<S: AsRef<str>>(
    observations: &[S],
    vocab: &[String],
    epsilon: f64,
) -> Result<TokenLattice, HmmError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(HmmError::InvalidObservation(format!("noise epsilon {epsilon} outside [0, 1]")));
    }
    let mut by_code: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for w in vocab {
        by_code.entry(encode(w)?).or_default().push(w);
    }
    let mut positions = Vec::with_capacity(observations.len());
    for (i, obs) in observations.iter().enumerate() {
        let obs = obs.as_ref();
        if obs.is_empty() || !obs.chars().all(|c| ('2'..='9').contains(&c)) {
            return Err(HmmError::InvalidObservation(obs.to_string()));
        }
        let mut cands = Vec::new();
        if epsilon < 1.0 {
            if let Some(words) = by_code.get(obs) {
                let lp = ((1.0 - epsilon) / words.len() as f64).ln();
                cands.extend(words.iter().map(|w| Candidate {
                    word: w.to_string(),
                    log_pobs: lp,
                }));
            }
        }
        if epsilon > 0.0 {
            let neighbors = one_key_neighbors(obs);
            let share = epsilon / neighbors.len() as f64;
            for s in &neighbors {
                if let Some(words) = by_code.get(s) {
                    let lp = (share / words.len() as f64).ln();
                    cands.extend(words.iter().map(|w| Candidate {
                        word: w.to_string(),
                        log_pobs: lp,
                    }));
                }
            }
        }
        if cands.is_empty() {
            return Err(HmmError::NoCandidate {
                position: i,
                digits: obs.to_string(),
            });
        }
        cands.sort_by(|a, b| a.word.cmp(&b.word));
        positions.push(cands);
    }
    TokenLattice::new(positions)
}
