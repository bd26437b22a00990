use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use osstar_core::{write_trial_csv, History};
use osstar_hmm::QAutomaton;

pub const AR_WINDOW: usize = 100;

/// Distinct `(position, context, word)` weights of each order, lowest first.
pub fn report_ngram_counts(q: &QAutomaton) -> Vec<usize> {
    q.ngram_counts()
}

pub fn ngram_table(counts: &[usize]) -> String {
    let mut out = String::from("  order  n-grams\n");
    for (k, c) in counts.iter().enumerate() {
        out.push_str(&format!("  {:>5}  {:>7}\n", k + 1, c));
    }
    out
}

pub fn run_summary<C>(history: &History<C>, refinements: usize) -> String {
    format!(
        "trials {}  accepted {}  refinements {}\nAR cumulative {:.4}  AR-{} {:.4}\n",
        history.trial_count(),
        history.accept_count(),
        refinements,
        history.cumulative_rate(),
        AR_WINDOW,
        history.window_rate(AR_WINDOW),
    )
}

pub fn write_metrics<C>(history: &History<C>, path: Option<&Path>) -> anyhow::Result<()> {
    if let Some(path) = path {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        write_trial_csv(history, AR_WINDOW, &mut out)?;
        out.flush()?;
    }
    Ok(())
}
