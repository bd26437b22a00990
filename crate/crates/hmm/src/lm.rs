//! Backoff n-gram language models in ARPA format.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::HmmError;

pub type WordId = u32;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const MAX_ORDER: usize = 5;

const LN_10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    logprob: f64,
    backoff: f64,
}

/// A backoff language model. Probabilities are stored as natural logs.
///
/// Word ids follow the lexicographic order of the word strings, so comparing
/// id sequences compares sentences lexicographically.
#[derive(Debug, Clone)]
pub struct NGramLM {
    order: usize,
    vocab: Vec<String>,
    index: HashMap<String, WordId>,
    /// Keyed by `context ++ [word]`.
    entries: HashMap<Vec<WordId>, Entry>,
    bos: WordId,
}

/// One explicit n-gram: natural-log probability and backoff weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramEntry {
    pub words: Vec<String>,
    pub logprob: f64,
    pub backoff: f64,
}

impl NGramLM {
    /// Builds a model from explicit entries (natural logs). Every word must
    /// appear as a unigram; `<s>` is added to the vocabulary if missing.
    pub fn from_entries(order: usize, entries: &[NGramEntry]) -> Result<Self, HmmError> {
        if order == 0 || order > MAX_ORDER {
            return Err(HmmError::OrderUnsupported(order));
        }
        let mut words: Vec<String> = entries
            .iter()
            .filter(|e| e.words.len() == 1)
            .map(|e| e.words[0].clone())
            .collect();
        if !words.iter().any(|w| w == BOS) {
            words.push(BOS.to_string());
        }
        words.sort();
        words.dedup();
        let index: HashMap<String, WordId> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as WordId))
            .collect();
        let mut table = HashMap::with_capacity(entries.len());
        for e in entries {
            if e.words.is_empty() || e.words.len() > order {
                return Err(HmmError::Parse {
                    line: 0,
                    message: format!("entry {:?} does not fit order {order}", e.words),
                });
            }
            let key = e
                .words
                .iter()
                .map(|w| index.get(w).copied().ok_or_else(|| HmmError::UnknownWord(w.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            table.insert(
                key,
                Entry {
                    logprob: e.logprob,
                    backoff: e.backoff,
                },
            );
        }
        let bos = index[BOS];
        Ok(Self {
            order,
            vocab: words,
            index,
            entries: table,
            bos,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn bos(&self) -> WordId {
        self.bos
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.vocab[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    /// Words that may occur inside a sentence: everything but `<s>` and `</s>`.
    pub fn alphabet(&self) -> Vec<WordId> {
        (0..self.vocab.len() as WordId)
            .filter(|&id| {
                let w = self.word(id);
                w != BOS && w != EOS
            })
            .collect()
    }

    /// Number of explicit n-grams of each order `1..=order`.
    pub fn ngram_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.order];
        for key in self.entries.keys() {
            counts[key.len() - 1] += 1;
        }
        counts
    }

    pub(crate) fn keys(&self) -> impl Iterator<Item = &Vec<WordId>> {
        self.entries.keys()
    }

    /// Natural-log backoff weight of a context; zero when not listed.
    pub fn backoff(&self, context: &[WordId]) -> f64 {
        self.entries.get(context).map_or(0.0, |e| e.backoff)
    }

    pub fn explicit_logprob(&self, ngram: &[WordId]) -> Option<f64> {
        self.entries.get(ngram).map(|e| e.logprob)
    }

    /// `ln p(word | context)` through the backoff recursion. Only the last
    /// `order - 1` context tokens are used.
    pub fn cond_logprob(&self, context: &[WordId], word: WordId) -> f64 {
        let keep = context.len().min(self.order - 1);
        let mut ctx = &context[context.len() - keep..];
        let mut key = Vec::with_capacity(keep + 1);
        let mut acc = 0.0;
        loop {
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.entries.get(&key) {
                return acc + e.logprob;
            }
            if ctx.is_empty() {
                return f64::NEG_INFINITY;
            }
            acc += self.backoff(ctx);
            ctx = &ctx[1..];
        }
    }

    /// The same model restricted to n-grams of order at most `order`.
    pub fn truncated(&self, order: usize) -> Result<Self, HmmError> {
        if order == 0 || order > self.order {
            return Err(HmmError::OrderUnsupported(order));
        }
        let mut out = self.clone();
        out.order = order;
        out.entries.retain(|k, _| k.len() <= order);
        for (k, e) in out.entries.iter_mut() {
            if k.len() == order {
                e.backoff = 0.0;
            }
        }
        Ok(out)
    }

    pub fn parse_arpa(text: &str) -> Result<Self, HmmError> {
        parse_arpa(text)
    }

    /// Serializes to ARPA text (log10 values).
    pub fn to_arpa(&self) -> String {
        let mut by_order: Vec<Vec<(&Vec<WordId>, &Entry)>> = vec![Vec::new(); self.order];
        for (k, e) in &self.entries {
            by_order[k.len() - 1].push((k, e));
        }
        for level in by_order.iter_mut() {
            level.sort_by(|a, b| a.0.cmp(b.0));
        }
        let mut out = String::from("\\data\\\n");
        for (i, level) in by_order.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", i + 1, level.len());
        }
        for (i, level) in by_order.iter().enumerate() {
            let _ = write!(out, "\n\\{}-grams:\n", i + 1);
            for (k, e) in level {
                let words: Vec<&str> = k.iter().map(|&id| self.word(id)).collect();
                let _ = write!(out, "{}\t{}", e.logprob / LN_10, words.join(" "));
                if i + 1 < self.order && e.backoff != 0.0 {
                    let _ = write!(out, "\t{}", e.backoff / LN_10);
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> HmmError {
    HmmError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads the standard ARPA text format (log10 probabilities and backoffs).
pub fn parse_arpa(text: &str) -> Result<NGramLM, HmmError> {
    enum Section {
        Preamble,
        Data,
        Grams(usize),
        End,
    }
    let mut section = Section::Preamble;
    let mut declared: Vec<(usize, usize)> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "\\data\\" {
            section = Section::Data;
            continue;
        }
        if line == "\\end\\" {
            section = Section::End;
            continue;
        }
        if let Some(rest) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
            let n: usize = rest
                .parse()
                .map_err(|_| parse_error(lineno, format!("bad section header {line:?}")))?;
            if n > MAX_ORDER {
                return Err(HmmError::OrderUnsupported(n));
            }
            if !declared.iter().any(|&(k, _)| k == n) {
                return Err(parse_error(lineno, format!("section {n}-grams not declared in \\data\\")));
            }
            if seen.len() < n {
                seen.resize(n, 0);
            }
            section = Section::Grams(n);
            continue;
        }
        match section {
            Section::Preamble => {}
            Section::End => return Err(parse_error(lineno, "content after \\end\\")),
            Section::Data => {
                let spec = line
                    .strip_prefix("ngram ")
                    .ok_or_else(|| parse_error(lineno, format!("expected `ngram N=COUNT`, got {line:?}")))?;
                let (n, count) = spec
                    .split_once('=')
                    .ok_or_else(|| parse_error(lineno, "missing `=` in ngram count"))?;
                let n: usize = n.trim().parse().map_err(|_| parse_error(lineno, "bad n-gram order"))?;
                let count: usize = count.trim().parse().map_err(|_| parse_error(lineno, "bad n-gram count"))?;
                if n == 0 {
                    return Err(parse_error(lineno, "n-gram order must be positive"));
                }
                if n > MAX_ORDER {
                    return Err(HmmError::OrderUnsupported(n));
                }
                declared.push((n, count));
            }
            Section::Grams(n) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != n + 1 && fields.len() != n + 2 {
                    return Err(parse_error(lineno, format!("expected {} or {} fields", n + 1, n + 2)));
                }
                let logprob: f64 = fields[0]
                    .parse()
                    .map_err(|_| parse_error(lineno, format!("bad probability {:?}", fields[0])))?;
                let backoff: f64 = match fields.get(n + 1) {
                    Some(b) => b
                        .parse()
                        .map_err(|_| parse_error(lineno, format!("bad backoff {b:?}")))?,
                    None => 0.0,
                };
                seen[n - 1] += 1;
                entries.push(NGramEntry {
                    words: fields[1..=n].iter().map(|w| w.to_string()).collect(),
                    logprob: logprob * LN_10,
                    backoff: backoff * LN_10,
                });
            }
        }
    }
    if !matches!(section, Section::End) {
        return Err(parse_error(text.lines().count(), "missing \\end\\ marker"));
    }
    if declared.is_empty() {
        return Err(parse_error(0, "missing \\data\\ section"));
    }
    for &(n, count) in &declared {
        let got = seen.get(n - 1).copied().unwrap_or(0);
        if got != count {
            return Err(parse_error(0, format!("declared {count} {n}-grams, found {got}")));
        }
    }
    let order = declared.iter().map(|&(n, _)| n).max().unwrap_or(0);
    NGramLM::from_entries(order, &entries).map_err(|e| match e {
        HmmError::UnknownWord(w) => parse_error(0, format!("word {w:?} used in an n-gram but missing from 1-grams")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unigram_ab() -> String {
        format!(
            "\\data\\\nngram 1=2\nngram 2=1\n\n\\1-grams:\n{} a {}\n{} b\n\n\\2-grams:\n{} b a\n\n\\end\\\n",
            0.6f64.log10(),
            0.5f64.log10(),
            0.4f64.log10(),
            0.7f64.log10()
        )
    }

    #[test]
    fn unigram_read_back() {
        let lm = parse_arpa(&unigram_ab()).unwrap();
        let a = lm.id("a").unwrap();
        assert!((lm.cond_logprob(&[], a).exp() - 0.6).abs() < 1e-12);
        assert_eq!(lm.order(), 2);
    }

    #[test]
    fn missing_bigram_backs_off() {
        let lm = parse_arpa(&unigram_ab()).unwrap();
        let (a, b) = (lm.id("a").unwrap(), lm.id("b").unwrap());
        // bow(a) * p(b) = 0.5 * 0.4
        assert!((lm.cond_logprob(&[a], b).exp() - 0.2).abs() < 1e-12);
        assert!((lm.cond_logprob(&[b], a).exp() - 0.7).abs() < 1e-12);
        // b has no backoff weight listed: p(b | b) = p(b)
        assert!((lm.cond_logprob(&[b], b).exp() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn missing_end_marker_is_an_error() {
        let text = unigram_ab().replace("\\end\\", "");
        assert!(matches!(parse_arpa(&text), Err(HmmError::Parse { .. })));
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let text = unigram_ab().replace("ngram 1=2", "ngram 1=3");
        assert!(matches!(parse_arpa(&text), Err(HmmError::Parse { .. })));
    }

    #[test]
    fn order_above_five_is_unsupported() {
        let text = "\\data\\\nngram 1=1\nngram 6=0\n\n\\1-grams:\n-1 a\n\n\\end\\\n";
        assert!(matches!(parse_arpa(text), Err(HmmError::OrderUnsupported(6))));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "\\data\\\nngram 1=1\n\n\\1-grams:\nxyz a\n\n\\end\\\n";
        match parse_arpa(text) {
            Err(HmmError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ids_are_sorted_and_bos_present() {
        let lm = parse_arpa(&unigram_ab()).unwrap();
        assert_eq!(lm.vocab(), &["<s>", "a", "b"]);
        assert_eq!(lm.alphabet(), vec![1, 2]);
    }

    #[test]
    fn arpa_text_round_trips() {
        let lm = parse_arpa(&unigram_ab()).unwrap();
        let again = parse_arpa(&lm.to_arpa()).unwrap();
        for c in [vec![], vec![1], vec![2]] {
            for w in [1, 2] {
                assert!((lm.cond_logprob(&c, w) - again.cond_logprob(&c, w)).abs() < 1e-12);
            }
        }
    }
}
