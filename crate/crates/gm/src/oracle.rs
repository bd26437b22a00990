//! Exhaustive enumeration for small models.

use osstar_core::logspace::log_sum_exp;

use crate::model::{Configuration, PairwiseModel};

/// Every configuration in lexicographic order.
pub fn configurations(model: &PairwiseModel) -> Vec<Configuration> {
    let mut out = vec![Vec::new()];
    for v in 0..model.num_nodes() {
        out = out
            .into_iter()
            .flat_map(|x: Configuration| {
                (0..model.domain(v)).map(move |k| {
                    let mut y = x.clone();
                    y.push(k);
                    y
                })
            })
            .collect();
    }
    out
}

/// `ln Z`.
pub fn log_partition(model: &PairwiseModel) -> f64 {
    log_sum_exp(configurations(model).iter().map(|x| model.log_p(x)))
}

/// `P(x_v = k)` for every node and value.
pub fn marginals(model: &PairwiseModel) -> Vec<Vec<f64>> {
    let z = log_partition(model);
    let mut out: Vec<Vec<f64>> = (0..model.num_nodes()).map(|v| vec![0.0; model.domain(v)]).collect();
    for x in configurations(model) {
        let p = (model.log_p(&x) - z).exp();
        for (v, &k) in x.iter().enumerate() {
            out[v][k] += p;
        }
    }
    out
}

/// The lexicographically smallest maximizer of `p`.
pub fn argmax(model: &PairwiseModel) -> (Configuration, f64) {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for x in configurations(model) {
        let v = model.log_p(&x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}
