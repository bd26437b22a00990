use std::fs;

use anyhow::{bail, Context};
use osstar_core::{Engine, EngineError, Mode, StopConfig};
use osstar_hmm::{build_lattice, ContextRefiner, HmmProblem, NGramLM, QAutomaton};

use crate::report::{ngram_table, report_ngram_counts, run_summary, write_metrics};
use crate::HmmArgs;

fn load(args: &HmmArgs) -> anyhow::Result<HmmProblem> {
    let arpa = fs::read_to_string(&args.arpa).with_context(|| format!("reading {}", args.arpa.display()))?;
    let mut lm = NGramLM::parse_arpa(&arpa).with_context(|| format!("parsing {}", args.arpa.display()))?;
    if let Some(order) = args.order {
        let order = order as usize;
        if order > lm.order() {
            bail!("--order {order} exceeds the model order {}", lm.order());
        }
        lm = lm.truncated(order)?;
    }
    let vocab: Vec<String> = fs::read_to_string(&args.vocab)
        .with_context(|| format!("reading {}", args.vocab.display()))?
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect();
    let obs: Vec<&str> = args.obs.split_whitespace().collect();
    let lattice = build_lattice(&obs, &vocab, args.epsilon)?;
    Ok(HmmProblem::from_lm(lm, &lattice)?)
}

fn engine(args: &HmmArgs, mode: Mode) -> anyhow::Result<Engine<HmmProblem, QAutomaton, ContextRefiner>> {
    let problem = load(args)?;
    let q = QAutomaton::q0(&problem);
    let stop = StopConfig {
        ar_threshold: args.ar_threshold,
        max_trials: args.max_trials,
        ..StopConfig::default()
    };
    Ok(Engine::new(mode, problem, q, ContextRefiner::default(), stop, args.seed))
}

pub fn decode(args: &HmmArgs) -> anyhow::Result<()> {
    let result = engine(args, Mode::Optimization)?.run()?;
    write_metrics(&result.history, args.metrics_out.as_deref())?;
    let problem = result.final_proposal.problem().clone();
    let x = result.argmax().context("no argmax accepted")?;
    print!("{}", run_summary(&result.history, result.refinements));
    println!("argmax: {}", problem.words(x).join(" "));
    println!("log p: {:.6}", problem.log_p(x));
    println!("certificate ln q - ln p: {:.3e}", result.certificate_gap_log.unwrap_or(f64::NAN));
    print!("{}", ngram_table(&report_ngram_counts(&result.final_proposal)));
    Ok(())
}

pub fn sample(args: &HmmArgs) -> anyhow::Result<()> {
    let mut e = engine(args, Mode::Sampling)?;
    let batch = args.batch as usize;
    while !e.should_stop() {
        if e.history().trial_count() >= args.max_trials {
            return Err(EngineError::TrialLimitReached(args.max_trials).into());
        }
        if batch > 1 {
            e.batch_step(batch)?;
        } else {
            e.step()?;
        }
    }
    let before = e.history().accept_count();
    e.collect(args.samples, true)?;
    let result = e.finish();
    write_metrics(&result.history, args.metrics_out.as_deref())?;
    let problem = result.final_proposal.problem().clone();
    print!("{}", run_summary(&result.history, result.refinements));
    print!("{}", ngram_table(&report_ngram_counts(&result.final_proposal)));
    for x in result.accepted.iter().skip(before) {
        println!("{}", problem.words(x).join(" "));
    }
    Ok(())
}
