//! Maximum spanning forests on `ln(φmax / φmin)` edge weights (Prim).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::error::GmError;
use crate::model::PairwiseModel;

/// Maximum spanning forest of the graph restricted to `free` nodes.
///
/// Edges in `pinned` are taken first (as if of infinite weight); they must
/// form a forest. Each component is grown from its smallest node and ties go
/// to the smallest edge id. Returns sorted edge ids.
pub fn max_spanning_forest(model: &PairwiseModel, free: &[bool], pinned: &[usize]) -> Vec<usize> {
    let n = model.num_nodes();
    let mut is_pinned = vec![false; model.edges().len()];
    for &e in pinned {
        is_pinned[e] = true;
    }
    let weight = |e: usize| {
        if is_pinned[e] {
            f64::INFINITY
        } else {
            model.edge(e).spread()
        }
    };
    let mut visited = vec![false; n];
    let mut tree = Vec::new();
    let mut heap = BinaryHeap::new();
    for start in 0..n {
        if !free[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        let push = |heap: &mut BinaryHeap<_>, node: usize, visited: &[bool]| {
            for &e in model.incident(node) {
                let other = model.edge(e).other(node);
                if free[other] && !visited[other] {
                    heap.push((OrderedFloat(weight(e)), Reverse(e), other));
                }
            }
        };
        push(&mut heap, start, &visited);
        while let Some((_, Reverse(e), node)) = heap.pop() {
            if visited[node] {
                continue;
            }
            visited[node] = true;
            tree.push(e);
            push(&mut heap, node, &visited);
        }
    }
    tree.sort_unstable();
    tree
}

/// Maximum spanning tree of a connected model.
pub fn prim_max_tree(model: &PairwiseModel) -> Result<Vec<usize>, GmError> {
    let tree = max_spanning_forest(model, &vec![true; model.num_nodes()], &[]);
    let components = model.num_nodes() - tree.len();
    if components > 1 {
        return Err(GmError::Disconnected { components });
    }
    Ok(tree)
}
