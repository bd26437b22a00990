mod common;

use std::collections::HashMap;
use std::sync::Arc;

use common::*;
use osstar_core::{EngineRng, Mode};
use osstar_gm::{oracle, GmRefiner, PairwiseModel, PiecewiseProposal, PolicyKind, TreeRule};
use proptest::prelude::*;
use rand::SeedableRng;

fn proposal(model: PairwiseModel) -> PiecewiseProposal {
    PiecewiseProposal::new(Arc::new(model), TreeRule::default())
}

fn leaf_mass_sum(q: &PiecewiseProposal) -> f64 {
    log_sum(q.leaves().map(|l| q.region(l).proposal.log_mass()))
}

/// Every configuration lies in exactly one leaf and `q` never drops below `p`.
fn assert_partition(q: &PiecewiseProposal) {
    let m = q.model();
    for x in all_configs(&domains(m)) {
        let holders: Vec<usize> = q.leaves().filter(|&l| q.region(l).proposal.contains(&x)).collect();
        assert_eq!(holders.len(), 1, "{x:?} in {holders:?}");
        assert_eq!(q.leaf_of(&x), holders[0]);
        assert!(m.log_p(&x) <= q.log_q(&x) + 1e-9);
    }
    assert!((q.total_mass_log() - leaf_mass_sum(q)).abs() < 1e-9);
}

#[test]
fn single_leaf_sampling_reports_the_root() {
    let mut q = proposal(PairwiseModel::ising(2, 2, 0.5, 1).unwrap());
    let mut rng = EngineRng::seed_from_u64(0);
    assert_eq!(q.leaf_count(), 1);
    for _ in 0..100 {
        assert_eq!(q.sample_piecewise(&mut rng).1, 0);
    }
    assert_partition(&q);
    q.condition(0, 0).unwrap();
    assert_partition(&q);
}

#[test]
fn leaves_are_drawn_in_proportion_to_mass() {
    let m = PairwiseModel::new(vec![vec![1f64.ln(), 3f64.ln()]], vec![]).unwrap();
    let mut q = proposal(m);
    let children = q.condition(0, 0).unwrap();
    assert_eq!(children.len(), 2);
    let mut rng = EngineRng::seed_from_u64(4);
    let hits = (0..10_000).filter(|_| q.sample_piecewise(&mut rng).1 == children[1]).count();
    assert!((hits as f64 / 1e4 - 0.75).abs() < 0.01);
}

#[test]
fn split_grid_samples_match_normalized_q() {
    let mut q = proposal(PairwiseModel::ising(2, 2, 0.7, 9).unwrap());
    q.condition(0, 1).unwrap();
    let configs = all_configs(&[2; 4]);
    let z = log_sum(configs.iter().map(|x| q.log_q(x)));
    let probs: HashMap<_, _> = configs.iter().map(|x| (x.clone(), (q.log_q(x) - z).exp())).collect();
    let mut rng = EngineRng::seed_from_u64(5);
    let mut counts = HashMap::new();
    for _ in 0..50_000 {
        let (x, leaf) = q.sample_piecewise(&mut rng);
        assert!(q.region(leaf).proposal.contains(&x));
        *counts.entry(x).or_insert(0) += 1;
    }
    assert!(total_variation(&counts, &probs) < 0.02);
}

#[test]
fn triangle_split_is_exact() {
    let m = PairwiseModel::new(
        vec![vec![0.1, -0.3], vec![0.4, 0.0], vec![-0.2, 0.5]],
        vec![
            (0, 1, vec![vec![0.9, -0.1], vec![0.2, 0.3]]),
            (1, 2, vec![vec![-0.5, 0.6], vec![0.1, 0.0]]),
            (0, 2, vec![vec![0.3, 0.2], vec![-0.7, 0.4]]),
        ],
    )
    .unwrap();
    let mut q = proposal(m.clone());
    for rule in [TreeRule::Regrow, TreeRule::Inherit] {
        q = PiecewiseProposal::new(Arc::new(m.clone()), rule);
        let children = q.condition(0, 0).unwrap();
        assert_eq!(children.len(), 2);
        for x in all_configs(&[2; 3]) {
            assert!((q.log_q(&x) - m.log_p(&x)).abs() < 1e-12);
        }
        assert!((q.total_mass_log() - oracle::log_partition(&m)).abs() < 1e-9);
    }
    assert_partition(&q);
}

#[test]
fn inheriting_without_off_tree_edges_preserves_mass() {
    // A chain is its own spanning tree; conditioning an end node leaves
    // every other tree edge in place.
    let m = PairwiseModel::ising(1, 4, 0.6, 3).unwrap();
    let mut q = PiecewiseProposal::new(Arc::new(m.clone()), TreeRule::Inherit);
    let before = q.total_mass_log();
    q.condition(0, 3).unwrap();
    assert!((q.total_mass_log() - before).abs() < 1e-12);
    assert!((before - oracle::log_partition(&m)).abs() < 1e-9);
}

#[test]
fn conditioning_the_center_tightens_a_grid() {
    let m = PairwiseModel::ising(3, 3, 0.5, 2).unwrap();
    for rule in [TreeRule::Regrow, TreeRule::Inherit] {
        let mut q = PiecewiseProposal::new(Arc::new(m.clone()), rule);
        let before = q.total_mass_log();
        q.condition(0, 4).unwrap();
        assert!(q.total_mass_log() < before - 1e-9);
        assert_partition(&q);
    }
}

#[test]
fn conditioning_twice_is_refused() {
    let mut q = proposal(PairwiseModel::ising(2, 2, 0.3, 0).unwrap());
    let kids = q.condition(0, 2).unwrap();
    assert!(q.condition(0, 1).is_err());
    assert!(q.condition(kids[0], 2).is_err());
}

#[test]
fn highest_acceptance_rate_picks_the_best_split() {
    let m = PairwiseModel::ising(3, 3, 0.8, 11).unwrap();
    for mode in [Mode::Sampling, Mode::Optimization] {
        let base = proposal(m.clone());
        let after: Vec<f64> = (0..9)
            .map(|node| {
                let mut trial = base.clone();
                trial.condition(0, node).unwrap();
                match mode {
                    Mode::Sampling => trial.total_mass_log(),
                    Mode::Optimization => trial.log_max(),
                }
            })
            .collect();
        let best = after.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut refiner = GmRefiner::new(PolicyKind::HighestAcceptanceRate);
        let mut rng = EngineRng::seed_from_u64(0);
        let (leaf, node, _) = refiner.select_refinement(&base, None, mode, &mut rng).unwrap();
        assert_eq!(leaf, 0);
        assert!(after[node] <= best + 1e-9, "{mode:?}: {after:?} chose {node}");
    }
}

#[test]
fn reject_policies_split_the_rejects_leaf() {
    let m = PairwiseModel::ising(3, 3, 0.5, 6).unwrap();
    let mut q = proposal(m);
    q.condition(0, 4).unwrap();
    let x = vec![1, 0, 1, 1, 1, 0, 0, 1, 0];
    let expected = q.leaf_of(&x);
    for policy in [PolicyKind::RandomSplitAtReject, PolicyKind::HighestGapAtReject] {
        let mut refiner = GmRefiner::new(policy);
        let mut rng = EngineRng::seed_from_u64(1);
        let (leaf, node, _) = refiner.select_refinement(&q, Some(&x), Mode::Sampling, &mut rng).unwrap();
        assert_eq!(leaf, expected);
        assert_ne!(node, 4);
        assert!(refiner.select_refinement(&q, None, Mode::Sampling, &mut rng).is_err());
    }
}

#[test]
fn highest_gap_at_reject_minimizes_q_at_the_reject() {
    let m = PairwiseModel::ising(3, 3, 0.9, 8).unwrap();
    let q = proposal(m);
    let x = vec![0, 1, 1, 0, 1, 0, 0, 0, 1];
    let at: Vec<f64> = (0..9)
        .map(|node| {
            let mut trial = q.clone();
            trial.condition(0, node).unwrap();
            trial.log_q(&x)
        })
        .collect();
    let best = at.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut refiner = GmRefiner::new(PolicyKind::HighestGapAtReject);
    let mut rng = EngineRng::seed_from_u64(0);
    let (_, node, _) = refiner.select_refinement(&q, Some(&x), Mode::Sampling, &mut rng).unwrap();
    assert!(at[node] <= best + 1e-9, "{at:?} chose {node}");
    assert!(at[node] < q.log_q(&x));
}

#[test]
fn most_probable_region_picks_the_heavier_leaf() {
    // Node 0 weighs 5 : 1 and node 1 is free, so the leaves hold masses 10 and 2.
    let m = PairwiseModel::new(
        vec![vec![5f64.ln(), 0.0], vec![0.0, 0.0]],
        vec![(0, 1, vec![vec![0.0, 0.0], vec![0.0, 0.0]])],
    )
    .unwrap();
    let mut q = proposal(m);
    let kids = q.condition(0, 0).unwrap();
    let masses: Vec<f64> = kids.iter().map(|&k| q.region(k).proposal.log_mass().exp()).collect();
    assert!((masses[0] - 10.0).abs() < 1e-9 && (masses[1] - 2.0).abs() < 1e-9);
    let mut refiner = GmRefiner::new(PolicyKind::MostProbableRegion);
    let mut rng = EngineRng::seed_from_u64(0);
    let (leaf, node, _) = refiner.select_refinement(&q, None, Mode::Sampling, &mut rng).unwrap();
    assert_eq!((leaf, node), (kids[0], 1));
}

#[test]
fn queue_matches_fresh_scores() {
    let m = PairwiseModel::ising(3, 3, 0.6, 12).unwrap();
    let mut q = proposal(m);
    let mut refiner = GmRefiner::new(PolicyKind::HighestAcceptanceRate);
    let mut rng = EngineRng::seed_from_u64(0);
    for _ in 0..6 {
        refiner.refine_once(&mut q, None, Mode::Sampling, &mut rng).unwrap();
        let mut fresh: Vec<_> = q.leaves().flat_map(|l| GmRefiner::score_leaf(&q, l, Mode::Sampling).0).collect();
        let mut queued = refiner.queue_triples(&q);
        let key = |t: &osstar_gm::Triple| (t.leaf, t.node);
        fresh.sort_by_key(key);
        queued.sort_by_key(key);
        assert_eq!(fresh.len(), queued.len());
        for (a, b) in fresh.iter().zip(&queued) {
            assert_eq!(key(a), key(b));
            assert!(a.improvement_log == b.improvement_log || (a.improvement_log - b.improvement_log).abs() < 1e-12);
        }
    }
}

#[test]
fn a_single_node_model_is_exact_from_the_start() {
    let m = PairwiseModel::new(vec![vec![0.2, -0.4, 1.0]], vec![]).unwrap();
    let mut q = proposal(m.clone());
    assert!((q.total_mass_log() - oracle::log_partition(&m)).abs() < 1e-12);
    let mut refiner = GmRefiner::new(PolicyKind::HighestAcceptanceRate);
    let mut rng = EngineRng::seed_from_u64(0);
    refiner.refine_once(&mut q, None, Mode::Sampling, &mut rng).unwrap();
    assert_eq!(q.leaf_count(), 3);
    assert!(refiner.refine_once(&mut q, None, Mode::Sampling, &mut rng).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_policy_keeps_a_dominating_partition_with_falling_mass(
        seed in 0u64..10_000,
        n in 2usize..=7,
        extra in 0usize..8,
        policy in prop::sample::select(PolicyKind::ALL.to_vec()),
        inherit in any::<bool>(),
    ) {
        let m = random_model(seed, n, extra);
        let rule = if inherit { TreeRule::Inherit } else { TreeRule::Regrow };
        let mut q = PiecewiseProposal::new(Arc::new(m.clone()), rule);
        let mut refiner = GmRefiner::new(policy);
        let mut rng = EngineRng::seed_from_u64(seed);
        let configs = all_configs(&domains(&m));
        for _ in 0..6 {
            let reject = configs.iter().find(|x| q.log_q(x) > m.log_p(x) + 1e-9).cloned();
            let rejected = if policy.uses_reject() {
                match &reject {
                    Some(x) => Some(x),
                    None => break,
                }
            } else {
                None
            };
            let before: Vec<f64> = configs.iter().map(|x| q.log_q(x)).collect();
            let mass = q.total_mass_log();
            if refiner.refine_once(&mut q, rejected, Mode::Sampling, &mut rng).is_err() {
                break;
            }
            for (x, b) in configs.iter().zip(&before) {
                prop_assert!(m.log_p(x) <= q.log_q(x) + 1e-9);
                prop_assert!(q.log_q(x) <= b + 1e-9);
            }
            prop_assert!(q.total_mass_log() <= mass + 1e-9);
            prop_assert!((q.total_mass_log() - leaf_mass_sum(&q)).abs() < 1e-9);
        }
    }
}
