//! Probabilistic logic sampling and most-probable-configuration search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use fixedbitset::FixedBitSet;
use rand::Rng;

use super::model::ProbabilisticModel;
use crate::error::{Error, Result};
use crate::problem::{NrpInstance, Solution};

/// Default cap on search nodes pushed by [`sample_maxprob`].
pub const MAXPROB_NODE_LIMIT: usize = 2_000_000;

fn to_solution(model: &ProbabilisticModel<'_>, instance: &NrpInstance, nodes: &FixedBitSet) -> Solution {
    Solution::from_selection(instance, model.graph().expand(nodes))
}

/// Draws one node selection by visiting the ordering and sampling each node
/// from its table given the values already drawn.
pub fn sample_nodes<R: Rng + ?Sized>(model: &ProbabilisticModel<'_>, rng: &mut R) -> FixedBitSet {
    let mut selected = model.graph().empty_node_set();
    for (pos, &node) in model.ordering().nodes().iter().enumerate() {
        if !model.enabled(node, &selected) {
            continue;
        }
        let p = model.tables()[pos].enabled_probability();
        if rng.gen::<f64>() < p {
            selected.insert(node);
        }
    }
    selected
}

/// `count` independent draws. Every draw satisfies the interactions.
pub fn sample_pls<R: Rng + ?Sized>(
    model: &ProbabilisticModel<'_>,
    instance: &NrpInstance,
    count: usize,
    rng: &mut R,
) -> Vec<Solution> {
    (0..count)
        .map(|_| to_solution(model, instance, &sample_nodes(model, rng)))
        .collect()
}

struct Branch {
    prob: f64,
    /// Values of the first `assignment.len()` ordering positions.
    assignment: Vec<bool>,
    selected: FixedBitSet,
}

impl PartialEq for Branch {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Branch {}

impl PartialOrd for Branch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Branch {
    // max-heap: higher probability first, then the lexicographically smaller prefix
    fn cmp(&self, other: &Self) -> Ordering {
        self.prob
            .total_cmp(&other.prob)
            .then_with(|| other.assignment.cmp(&self.assignment))
    }
}

/// The `count` complete assignments of highest joint probability, best first.
/// Ties go to the lexicographically smaller assignment along the ordering
/// (0 before 1). Zero-probability assignments are never returned, so fewer
/// than `count` may come back.
pub fn sample_maxprob(
    model: &ProbabilisticModel<'_>,
    instance: &NrpInstance,
    count: usize,
    node_limit: usize,
) -> Result<Vec<Solution>> {
    let order = model.ordering().nodes();
    let mut heap = BinaryHeap::new();
    heap.push(Branch {
        prob: 1.0,
        assignment: Vec::with_capacity(order.len()),
        selected: model.graph().empty_node_set(),
    });
    let mut pushed = 1usize;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let Some(branch) = heap.pop() else { break };
        let depth = branch.assignment.len();
        if depth == order.len() {
            out.push(to_solution(model, instance, &branch.selected));
            continue;
        }
        let node = order[depth];
        let p1 = if model.enabled(node, &branch.selected) {
            model.tables()[depth].enabled_probability()
        } else {
            0.0
        };
        for (value, p) in [(false, 1.0 - p1), (true, p1)] {
            let prob = branch.prob * p;
            if prob <= 0.0 {
                continue;
            }
            pushed += 1;
            if pushed > node_limit {
                return Err(Error::Resource(format!(
                    "maxprob search exceeded {node_limit} nodes"
                )));
            }
            let mut assignment = branch.assignment.clone();
            assignment.push(value);
            let mut selected = branch.selected.clone();
            if value {
                selected.insert(node);
            }
            heap.push(Branch {
                prob,
                assignment,
                selected,
            });
        }
    }
    Ok(out)
}
