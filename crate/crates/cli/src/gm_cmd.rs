use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use osstar_core::{Engine, EngineError, Mode, StopConfig};
use osstar_gm::{policy_bench, write_bench_csv, BenchConfig, BenchRun, GmRefiner, PairwiseModel, PiecewiseProposal, PolicyKind, TreeRule};
use rayon::prelude::*;

use crate::report::{run_summary, write_metrics};
use crate::{BenchArgs, GmArgs, ModelSource};

fn load(source: &ModelSource, sigma: f64, seed: u64) -> anyhow::Result<PairwiseModel> {
    if let Some(path) = &source.model {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return PairwiseModel::from_json(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let (r, c) = source.grid.expect("clap requires --model or --grid");
    Ok(PairwiseModel::ising(r, c, sigma, seed)?)
}

type GmEngine = Engine<Box<dyn Fn(&Vec<usize>) -> f64>, PiecewiseProposal, GmRefiner>;

fn engine(args: &GmArgs, mode: Mode) -> anyhow::Result<GmEngine> {
    let model = Arc::new(load(&args.source, args.sigma, args.seed)?);
    let stop = StopConfig {
        ar_threshold: args.ar_threshold,
        max_refinements: args.refinements,
        max_trials: args.max_trials,
        ..StopConfig::default()
    };
    let target = {
        let model = model.clone();
        Box::new(move |x: &Vec<usize>| model.log_p(x)) as Box<dyn Fn(&Vec<usize>) -> f64>
    };
    let q = PiecewiseProposal::new(model, TreeRule::default());
    Ok(Engine::new(mode, target, q, GmRefiner::new(args.policy), stop, args.seed))
}

fn format_config(x: &[usize]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn sample(args: &GmArgs) -> anyhow::Result<()> {
    let mut e = engine(args, Mode::Sampling)?;
    while !e.should_stop() {
        if e.history().trial_count() >= args.max_trials {
            return Err(EngineError::TrialLimitReached(args.max_trials).into());
        }
        e.step()?;
    }
    let before = e.history().accept_count();
    e.collect(args.samples, true)?;
    let result = e.finish();
    write_metrics(&result.history, args.metrics_out.as_deref())?;
    print!("{}", run_summary(&result.history, result.refinements));
    println!("leaves {}  ln Q(X) {:.6}", result.final_proposal.leaf_count(), result.final_proposal.total_mass_log());
    for x in result.accepted.iter().skip(before) {
        println!("{}", format_config(x));
    }
    Ok(())
}

pub fn optimize(args: &GmArgs) -> anyhow::Result<()> {
    let result = engine(args, Mode::Optimization)?.run()?;
    write_metrics(&result.history, args.metrics_out.as_deref())?;
    let x = result.argmax().context("no argmax accepted")?;
    let log_p = result.history.last().map_or(f64::NAN, |r| r.log_p);
    print!("{}", run_summary(&result.history, result.refinements));
    println!("argmax: {}", format_config(x));
    println!("log p: {log_p:.6}");
    println!("certificate ln q - ln p: {:.3e}", result.certificate_gap_log.unwrap_or(f64::NAN));
    Ok(())
}

/// `out.csv` becomes `out-iv.csv`, or `out-iv-s3.csv` with several seeds.
fn job_path(base: &Path, policy: PolicyKind, seed: u64, with_seed: bool) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut name = format!("{stem}-{}", policy.label());
    if with_seed {
        name.push_str(&format!("-s{seed}"));
    }
    if let Some(ext) = base.extension() {
        name.push('.');
        name.push_str(&ext.to_string_lossy());
    }
    base.with_file_name(name)
}

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let threads = match std::env::var("OSSTAR_THREADS") {
        Ok(v) => v.trim().parse::<usize>().with_context(|| format!("OSSTAR_THREADS={v:?} is not a count"))?,
        Err(_) => 0,
    };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let policies: Vec<PolicyKind> = match args.policy {
        Some(p) => vec![p],
        None => PolicyKind::ALL.to_vec(),
    };
    let seeds: Vec<u64> = (0..args.runs).map(|k| args.seed + k).collect();
    let jobs: Vec<(PolicyKind, u64)> = policies.iter().flat_map(|&p| seeds.iter().map(move |&s| (p, s))).collect();
    let runs: Vec<anyhow::Result<BenchRun>> = thread_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(policy, seed)| {
                let model = Arc::new(load(&args.source, args.sigma, seed)?);
                let config = BenchConfig {
                    batch: args.batch as usize,
                    n: args.n,
                    cost: args.cost.model(),
                    max_trials: args.max_trials,
                    ..BenchConfig::new(policy, args.refinements, seed)
                };
                Ok(policy_bench(model, &config)?)
            })
            .collect()
    });
    let single = jobs.len() == 1;
    eprintln!("policy  seed  rows  trials  ln Q(X)       AR est   min tau_tot  at");
    for (&(policy, seed), run) in jobs.iter().zip(runs) {
        let run = run?;
        match (&args.metrics_out, single) {
            (Some(path), true) => write_csv(&run, path)?,
            (Some(path), false) => write_csv(&run, &job_path(path, policy, seed, seeds.len() > 1))?,
            (None, true) => write_bench_csv(&run.rows, io::stdout().lock())?,
            (None, false) => {}
        }
        let last = run.rows.last();
        let best = run
            .rows
            .iter()
            .min_by(|a, b| a.tau_tot_est.total_cmp(&b.tau_tot_est));
        eprintln!(
            "{:<6}  {:>4}  {:>4}  {:>6}  {:>11.6}  {:>7.4}  {:>11.1}  {}",
            policy.label(),
            seed,
            run.rows.len(),
            run.history.trial_count(),
            run.proposal.total_mass_log(),
            last.map_or(f64::NAN, |r| r.ar_hat),
            best.map_or(f64::NAN, |r| r.tau_tot_est),
            best.map_or(0, |r| r.refinement_index),
        );
    }
    Ok(())
}

fn write_csv(run: &BenchRun, path: &Path) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    write_bench_csv(&run.rows, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn gen_ising(grid: (usize, usize), sigma: f64, seed: u64, out: Option<&Path>) -> anyhow::Result<()> {
    let json = PairwiseModel::ising(grid.0, grid.1, sigma, seed)?.to_json();
    match out {
        Some(path) => fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}
