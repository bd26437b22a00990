mod common;

use std::collections::HashMap;

use common::*;
use osstar_hmm::lm::NGramLM;
use osstar_hmm::MaxBackoffTables;
use proptest::prelude::*;
use std::sync::Arc;

/// A direct ARPA evaluator over word strings, independent of the model's ids.
struct Arpa {
    order: usize,
    table: HashMap<Vec<String>, (f64, f64)>,
}

impl Arpa {
    fn parse(text: &str) -> Self {
        let mut table = HashMap::new();
        let mut order = 0;
        let mut section = 0;
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('\\') {
                section = rest.split('-').next().unwrap().parse().unwrap_or(0);
                order = order.max(section);
                continue;
            }
            if section == 0 || line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let lp: f64 = fields[0].parse().unwrap();
            let words: Vec<String> = fields[1..1 + section].iter().map(|s| s.to_string()).collect();
            let bo: f64 = fields.get(1 + section).map_or(0.0, |s| s.parse().unwrap());
            table.insert(words, (lp, bo));
        }
        Self { order, table }
    }

    /// log10 p(word | context).
    fn prob(&self, context: &[String], word: &str) -> f64 {
        let context = &context[context.len().saturating_sub(self.order - 1)..];
        let mut key = context.to_vec();
        key.push(word.to_string());
        if let Some(&(lp, _)) = self.table.get(&key) {
            return lp;
        }
        if context.is_empty() {
            return f64::NEG_INFINITY;
        }
        let bo = self.table.get(context).map_or(0.0, |e| e.1);
        bo + self.prob(&context[1..], word)
    }
}

fn contexts(words: &[String], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for c in &frontier {
            for w in words.iter().chain(std::iter::once(&"<s>".to_string())) {
                let mut d: Vec<String> = vec![w.clone()];
                d.extend(c.iter().cloned());
                if d[1..].iter().any(|t| t == "<s>") {
                    continue;
                }
                next.push(d);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn backoff_recursion_matches_direct_evaluation() {
    for seed in 0..5 {
        let lm = harsh_lm(seed, 3, 3);
        let text = lm.to_arpa();
        let parsed = NGramLM::parse_arpa(&text).unwrap();
        let direct = Arpa::parse(&text);
        let vocab = words(3);
        for c in contexts(&vocab, 2) {
            let ids: Vec<_> = c.iter().map(|w| parsed.id(w).unwrap()).collect();
            for w in &vocab {
                let ours = parsed.cond_logprob(&ids, parsed.id(w).unwrap()) / std::f64::consts::LN_10;
                let theirs = direct.prob(&c, w);
                assert!((ours - theirs).abs() < 1e-9, "{c:?} {w}: {ours} vs {theirs}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn max_backoff_bounds_every_complete_history(seed in 0u64..10_000, vocab in 2usize..=4, order in 1usize..=4) {
        let lm = harsh_lm(seed, vocab, order);
        let tables = MaxBackoffTables::build(Arc::new(lm.clone()));
        let names = words(vocab);
        let all = contexts(&names, order - 1);
        let bos = lm.bos();
        let as_ids = |c: &Vec<String>| c.iter().map(|w| lm.id(w).unwrap()).collect::<Vec<_>>();
        let complete: Vec<Vec<u32>> = all
            .iter()
            .map(as_ids)
            .filter(|c| c.len() == order - 1 || c.first() == Some(&bos))
            .collect();
        for c in all.iter().map(as_ids) {
            for w in tables.alphabet().to_vec() {
                let v = tables.value(w, &c);
                let best = complete
                    .iter()
                    .filter(|h| h.ends_with(&c))
                    .map(|h| lm.cond_logprob(h, w))
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert!((v - best).abs() < 1e-9, "context {:?} word {}: {} vs {}", c, w, v, best);
            }
        }
    }
}
