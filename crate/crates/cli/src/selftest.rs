//! Quick end-to-end checks against exhaustive enumeration.

use std::collections::HashMap;
use std::sync::Arc;

use osstar_core::logspace::log_sum_exp;
use osstar_core::{Engine, EngineRng, Mode, Proposal, StopConfig};
use osstar_gm::{oracle as gm_oracle, GmRefiner, PairwiseModel, PiecewiseProposal, PolicyKind, TreeRule};
use osstar_hmm::{oracle as hmm_oracle, ContextRefiner, QAutomaton, SmsInstance, SyntheticConfig};
use rand::SeedableRng;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn small_sms(seed: u64) -> osstar_hmm::HmmProblem {
    let config = SyntheticConfig {
        order: 3,
        codes: 4,
        words_per_code: 3,
        sentence_len: 4,
        seed,
        ..SyntheticConfig::default()
    };
    SmsInstance::generate(&config).and_then(|i| i.problem()).expect("synthetic instance")
}

fn hmm_decode() -> Check {
    let mut hits = 0;
    let total = 20;
    for seed in 0..total {
        let p = small_sms(seed);
        let (best, _) = hmm_oracle::argmax(&p, |x| p.log_p(x));
        let result = Engine::new(Mode::Optimization, p.clone(), QAutomaton::q0(&p), ContextRefiner::default(), StopConfig::default(), seed)
            .run();
        if let Ok(r) = result {
            if r.argmax() == Some(&best) && r.certificate_gap_log.is_some_and(|g| g.abs() < 1e-9) {
                hits += 1;
            }
        }
    }
    Check {
        name: "hmm decode = enumerated argmax",
        passed: hits == total,
        detail: format!("{hits}/{total} instances"),
    }
}

fn hmm_domination() -> Check {
    let p = small_sms(3);
    let sentences = hmm_oracle::enumerate(&p);
    let mut q = QAutomaton::q0(&p);
    let mut worst = f64::NEG_INFINITY;
    let mut rng = EngineRng::seed_from_u64(0);
    let mut refiner = ContextRefiner::default();
    for _ in 0..30 {
        for x in &sentences {
            worst = worst.max(p.log_p(x) - q.log_q(x));
        }
        let x = q.sample(&mut rng);
        let record = osstar_core::TrialRecord {
            log_p: p.log_p(&x),
            log_q: q.log_q(&x),
            config: x,
            accepted: false,
            proposal_mass_log: 0.0,
            trial_cost: 0.0,
        };
        if osstar_core::Refiner::refine(&mut refiner, &mut q, Some(&record), Mode::Sampling, &mut rng).is_err() {
            break;
        }
    }
    Check {
        name: "hmm q dominates p while refining",
        passed: worst <= 1e-9,
        detail: format!("max ln p - ln q = {worst:.2e}"),
    }
}

fn hmm_sampling() -> Check {
    let p = small_sms(5);
    let sentences = hmm_oracle::enumerate(&p);
    let z = hmm_oracle::log_total(&p, |x| p.log_p(x));
    let mut e = Engine::new(Mode::Sampling, p.clone(), QAutomaton::q0(&p), ContextRefiner::default(), StopConfig::default(), 1);
    let n = 20_000;
    if let Err(err) = e.collect(n, true) {
        return Check { name: "hmm samples follow p", passed: false, detail: err.to_string() };
    }
    let mut counts: HashMap<&Vec<u32>, usize> = HashMap::new();
    for x in e.history().accepted_configs() {
        *counts.entry(x).or_default() += 1;
    }
    let tv: f64 = sentences
        .iter()
        .map(|x| ((p.log_p(x) - z).exp() - *counts.get(x).unwrap_or(&0) as f64 / n as f64).abs())
        .sum::<f64>()
        / 2.0;
    Check {
        name: "hmm samples follow p",
        passed: tv < 0.03,
        detail: format!("TV {tv:.4} over {n} samples"),
    }
}

fn gm_optimize() -> Check {
    let mut hits = 0;
    let total = 10;
    for seed in 0..total {
        let model = Arc::new(PairwiseModel::ising(3, 3, 0.5, seed).expect("grid"));
        let (best, _) = gm_oracle::argmax(&model);
        let m = model.clone();
        let result = Engine::new(
            Mode::Optimization,
            move |x: &Vec<usize>| m.log_p(x),
            PiecewiseProposal::new(model, TreeRule::default()),
            GmRefiner::new(PolicyKind::HighestAcceptanceRate),
            StopConfig::default(),
            seed,
        )
        .run();
        if result.is_ok_and(|r| r.argmax() == Some(&best)) {
            hits += 1;
        }
    }
    Check {
        name: "gm optimize = enumerated argmax",
        passed: hits == total,
        detail: format!("{hits}/{total} grids"),
    }
}

fn gm_marginals() -> Check {
    let model = Arc::new(PairwiseModel::ising(2, 2, 0.5, 1).expect("grid"));
    let exact = gm_oracle::marginals(&model);
    let m = model.clone();
    let mut e = Engine::new(
        Mode::Sampling,
        move |x: &Vec<usize>| m.log_p(x),
        PiecewiseProposal::new(model.clone(), TreeRule::default()),
        GmRefiner::new(PolicyKind::HighestGapAtReject),
        StopConfig::default(),
        2,
    );
    let n = 20_000;
    if let Err(err) = e.collect(n, true) {
        return Check { name: "gm marginals", passed: false, detail: err.to_string() };
    }
    let mut worst: f64 = 0.0;
    for v in 0..model.num_nodes() {
        let ones = e.history().accepted_configs().filter(|x| x[v] == 1).count() as f64 / n as f64;
        worst = worst.max((ones - exact[v][1]).abs());
    }
    Check {
        name: "gm marginals",
        passed: worst < 0.02,
        detail: format!("max error {worst:.4} over {n} samples"),
    }
}

fn gm_mass() -> Check {
    let model = Arc::new(PairwiseModel::ising(3, 3, 0.5, 4).expect("grid"));
    let configs = gm_oracle::configurations(&model);
    let z = log_sum_exp(configs.iter().map(|x| model.log_p(x)));
    let mut ok = true;
    for policy in [PolicyKind::MostProbableRegion, PolicyKind::HighestAcceptanceRate] {
        let mut q = PiecewiseProposal::new(model.clone(), TreeRule::default());
        let mut refiner = GmRefiner::new(policy);
        let mut rng = EngineRng::seed_from_u64(0);
        let mut last = q.total_mass_log();
        for _ in 0..20 {
            if refiner.refine_once(&mut q, None, Mode::Sampling, &mut rng).is_err() {
                break;
            }
            let mass = q.total_mass_log();
            ok &= mass <= last + 1e-9 && mass >= z - 1e-9;
            ok &= configs.iter().all(|x| model.log_p(x) <= q.log_q(x) + 1e-9);
            last = mass;
        }
    }
    Check {
        name: "gm mass falls and stays above Z",
        passed: ok,
        detail: "20 splits, policies iii and iv".into(),
    }
}

/// Prints one line per check; returns whether all passed.
pub fn run() -> bool {
    let checks = [hmm_decode(), hmm_domination(), hmm_sampling(), gm_optimize(), gm_marginals(), gm_mass()];
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        println!("{:<width$}  {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    checks.iter().all(|c| c.passed)
}
