use std::cmp::Ordering;
use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use rand::Rng;

use super::model::ProbabilisticModel;
use super::sampling::{sample_maxprob, sample_pls};
use super::{EdaConfig, InitMethod};
use crate::error::Result;
use crate::graph::{AncestralOrdering, InteractionGraph};
use crate::metrics::nondominated_filter;
use crate::problem::{NrpInstance, Solution};

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    individuals: Vec<Solution>,
    capacity: usize,
}

impl Population {
    /// Wraps `individuals`, truncating to `capacity`.
    pub fn from_individuals(mut individuals: Vec<Solution>, capacity: usize) -> Self {
        individuals.truncate(capacity);
        Population {
            individuals,
            capacity,
        }
    }

    pub fn individuals(&self) -> &[Solution] {
        &self.individuals
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// Same set of requirement selections, ignoring order.
    pub fn same_selections(&self, other: &Population) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mine: HashSet<&FixedBitSet> = self.individuals.iter().map(Solution::selected).collect();
        other.individuals.iter().all(|s| mine.contains(s.selected()))
    }
}

/// Uniform bit per decision node in ordering order, set only when the node is
/// still allowed by the nodes already chosen.
fn random_individual<R: Rng + ?Sized>(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    ordering: &AncestralOrdering,
    rng: &mut R,
) -> Solution {
    let mut selected = graph.empty_node_set();
    for &node in ordering.nodes() {
        let coin = rng.gen_bool(0.5);
        if coin && graph.can_add(node, &selected) {
            selected.insert(node);
        }
    }
    Solution::from_selection(instance, graph.expand(&selected))
}

/// The starting population of `config.population_size` individuals.
pub fn initialize_population<R: Rng + ?Sized>(
    instance: &NrpInstance,
    model: &ProbabilisticModel<'_>,
    config: &EdaConfig,
    rng: &mut R,
) -> Result<Population> {
    let size = config.population_size;
    let individuals = match config.init {
        InitMethod::Random => (0..size)
            .map(|_| random_individual(instance, model.graph(), model.ordering(), rng))
            .collect(),
        InitMethod::Pls => sample_pls(model, instance, size, rng),
        InitMethod::Maxprob => sample_maxprob(model, instance, size, config.maxprob_node_limit)?,
    };
    Ok(Population::from_individuals(individuals, size))
}

fn overflow_order(a: &Solution, b: &Solution) -> Ordering {
    b.satisfaction()
        .total_cmp(&a.satisfaction())
        .then(a.effort().total_cmp(&b.effort()))
        .then_with(|| a.indices().cmp(&b.indices()))
}

/// Next population: the union of `current` and `sample`, without repeated
/// selections or budget violations, filled front by front. The first front
/// that does not fit is cut by descending satisfaction, then ascending
/// effort, then requirement indices.
pub fn replace(current: &Population, sample: Vec<Solution>, instance: &NrpInstance) -> Population {
    let capacity = current.capacity;
    let mut seen = HashSet::new();
    let mut pool: Vec<Solution> = current
        .individuals
        .iter()
        .cloned()
        .chain(sample)
        .filter(|s| s.effort() <= instance.effort_limit && seen.insert(s.selected().clone()))
        .collect();

    let mut next = Vec::with_capacity(capacity);
    while !pool.is_empty() && next.len() < capacity {
        let front = nondominated_filter(instance.name.clone(), pool.iter().cloned());
        let layer: HashSet<&FixedBitSet> = front.solutions().iter().map(Solution::selected).collect();
        let (mut inside, rest): (Vec<Solution>, Vec<Solution>) =
            pool.into_iter().partition(|s| layer.contains(s.selected()));
        inside.sort_by(overflow_order);
        inside.truncate(capacity - next.len());
        next.extend(inside);
        pool = rest;
    }
    Population {
        individuals: next,
        capacity,
    }
}
