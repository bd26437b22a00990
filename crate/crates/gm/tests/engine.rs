mod common;

use std::sync::Arc;

use common::*;
use osstar_core::{Engine, Metrics, Mode, StopConfig};
use osstar_gm::{oracle, policy_bench, BenchConfig, GmRefiner, PairwiseModel, PiecewiseProposal, PolicyKind, TreeRule};

fn engine(
    model: &Arc<PairwiseModel>,
    mode: Mode,
    policy: PolicyKind,
    seed: u64,
) -> Engine<impl Fn(&Vec<usize>) -> f64, PiecewiseProposal, GmRefiner> {
    let m = model.clone();
    Engine::new(
        mode,
        move |x: &Vec<usize>| m.log_p(x),
        PiecewiseProposal::new(model.clone(), TreeRule::default()),
        GmRefiner::new(policy),
        StopConfig::default(),
        seed,
    )
}

#[test]
fn optimization_finds_the_enumerated_argmax() {
    for seed in 0..30 {
        let model = Arc::new(random_model(seed, 7, 6));
        for policy in PolicyKind::ALL {
            let result = engine(&model, Mode::Optimization, policy, seed).run().unwrap();
            let (best, best_log_p) = oracle::argmax(&model);
            assert_eq!(result.argmax().unwrap(), &best, "seed {seed} policy {policy}");
            assert!(result.certificate_gap_log.unwrap().abs() < 1e-9);
            assert!((model.log_p(&best) - best_log_p).abs() < 1e-12);
        }
    }
}

#[test]
fn marginals_of_a_small_grid_match_enumeration() {
    let model = Arc::new(PairwiseModel::ising(2, 3, 0.5, 4).unwrap());
    let mut e = engine(&model, Mode::Sampling, PolicyKind::HighestGapAtReject, 1);
    while !e.should_stop() {
        e.step().unwrap();
    }
    let before = e.history().accept_count();
    e.collect(40_000, false).unwrap();
    let exact = oracle::marginals(&model);
    let samples: Vec<_> = e.history().accepted_configs().skip(before).cloned().collect();
    for v in 0..model.num_nodes() {
        let ones = samples.iter().filter(|x| x[v] == 1).count() as f64 / samples.len() as f64;
        assert!((ones - exact[v][1]).abs() < 0.01, "node {v}: {ones} vs {}", exact[v][1]);
    }
}

#[test]
fn partition_estimate_is_unbiased() {
    let model = Arc::new(PairwiseModel::ising(2, 2, 0.8, 2).unwrap());
    let z = oracle::log_partition(&model).exp();
    let runs = 200;
    let mut total = 0.0;
    for seed in 0..runs {
        let mut e = engine(&model, Mode::Sampling, PolicyKind::RandomSplitAtReject, seed);
        for _ in 0..20 {
            e.step().unwrap();
        }
        let mass = e.proposal().total_mass_log();
        total += Metrics::compute(e.history(), mass, 1, 100).unwrap().z_hat_log.exp();
    }
    let mean = total / runs as f64;
    assert!((mean / z - 1.0).abs() < 0.02, "{mean} vs {z}");
}

#[test]
fn bench_rows_track_each_refinement() {
    let model = Arc::new(PairwiseModel::ising(4, 4, 0.1, 0).unwrap());
    for policy in PolicyKind::ALL {
        // Reject-driven policies stall once q is exact, which a 4x4 grid reaches
        // within a few dozen splits.
        let budget = if policy.uses_reject() { 10 } else { 40 };
        let run = policy_bench(model.clone(), &BenchConfig::new(policy, budget, 3)).unwrap();
        assert_eq!(run.rows.len(), budget, "{policy}");
        for (i, pair) in run.rows.windows(2).enumerate() {
            assert_eq!(pair[0].refinement_index, i + 1);
            assert!(pair[1].q_mass_log <= pair[0].q_mass_log + 1e-9);
            assert!(pair[1].tau_ref >= pair[0].tau_ref);
        }
        assert!((run.rows[budget - 1].q_mass_log - run.proposal.total_mass_log()).abs() < 1e-12);
    }
}

#[test]
fn an_exact_bound_leaves_nothing_to_reject() {
    let model = Arc::new(PairwiseModel::ising(3, 3, 0.5, 0).unwrap());
    let mut config = BenchConfig::new(PolicyKind::HighestGapAtReject, 1000, 1);
    config.max_trials = 20_000;
    let run = policy_bench(model.clone(), &config).unwrap();
    assert!(run.rows.len() < 1000);
    assert!((run.proposal.total_mass_log() - oracle::log_partition(&model)).abs() < 1e-9);
}

#[test]
fn bench_is_deterministic() {
    let model = Arc::new(PairwiseModel::ising(3, 3, 0.3, 1).unwrap());
    let config = BenchConfig::new(PolicyKind::HighestAcceptanceRate, 15, 9);
    let a = policy_bench(model.clone(), &config).unwrap().rows;
    let b = policy_bench(model, &config).unwrap().rows;
    assert_eq!(a, b);
}
