#![allow(dead_code)]

use std::collections::HashMap;

use osstar_gm::{Configuration, PairwiseModel, SubspaceProposal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn all_configs(domains: &[usize]) -> Vec<Configuration> {
    let mut out = vec![Vec::new()];
    for &k in domains {
        out = out
            .into_iter()
            .flat_map(|x: Configuration| {
                (0..k).map(move |v| {
                    let mut y = x.clone();
                    y.push(v);
                    y
                })
            })
            .collect();
    }
    out
}

pub fn domains(model: &PairwiseModel) -> Vec<usize> {
    (0..model.num_nodes()).map(|v| model.domain(v)).collect()
}

pub fn log_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln q(x)` straight from the bound's definition: exact potentials on tree
/// edges and on edges touching evidence, maxima on every other edge.
pub fn bound_by_definition(model: &PairwiseModel, evidence: &[Option<usize>], tree: &[usize], x: &[usize]) -> f64 {
    if evidence.iter().zip(x).any(|(e, &v)| e.is_some_and(|e| e != v)) {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for (v, &k) in x.iter().enumerate() {
        total += model.log_psi(v)[k];
    }
    for (id, e) in model.edges().iter().enumerate() {
        let exact = tree.contains(&id) || evidence[e.u].is_some() || evidence[e.v].is_some();
        total += if exact { e.log_phi[x[e.u]][x[e.v]] } else { e.log_max };
    }
    total
}

pub fn check_bound(model: &PairwiseModel, s: &SubspaceProposal) -> Vec<(Configuration, f64)> {
    all_configs(&domains(model))
        .into_iter()
        .filter(|x| s.contains(x))
        .map(|x| {
            let q = bound_by_definition(model, s.evidence(), s.tree(), &x);
            (x, q)
        })
        .collect()
}

/// A random connected model on `n` binary-or-ternary nodes.
pub fn random_model(seed: u64, n: usize, extra_edges: usize) -> PairwiseModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let k = if rng.random_bool(0.25) { 3 } else { 2 };
            (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    let mut edges = Vec::new();
    let table = |rng: &mut ChaCha8Rng, a: usize, b: usize| -> Vec<Vec<f64>> {
        (0..a).map(|_| (0..b).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    };
    let mut seen = std::collections::HashSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        seen.insert((u, v));
        let t = table(&mut rng, psi[u].len(), psi[v].len());
        edges.push((u, v, t));
    }
    for _ in 0..extra_edges {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        let (u, v) = (u.min(v), u.max(v));
        if u == v || !seen.insert((u, v)) {
            continue;
        }
        let t = table(&mut rng, psi[u].len(), psi[v].len());
        edges.push((u, v, t));
    }
    PairwiseModel::new(psi, edges).unwrap()
}

pub fn total_variation(counts: &HashMap<Configuration, usize>, probs: &HashMap<Configuration, f64>) -> f64 {
    let n: usize = counts.values().sum();
    probs
        .iter()
        .map(|(x, p)| (*counts.get(x).unwrap_or(&0) as f64 / n as f64 - p).abs())
        .sum::<f64>()
        / 2.0
}
