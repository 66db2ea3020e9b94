//! Fixed-structure probabilistic model over the transformed interaction graph.
//!
//! Each decision node has one conditional table over its graph parents
//! (implication parents and indicators). Only the configuration where every
//! parent is 1 lets the node be selected; its probability is the single
//! learnable parameter. Every other configuration is pinned at 0.

use fixedbitset::FixedBitSet;

use super::population::Population;
use super::EdaConfig;
use crate::graph::{AncestralOrdering, InteractionGraph, NodeIdx};

/// Largest in-degree accepted for a decision node.
pub const MAX_PARENTS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable {
    node: NodeIdx,
    parents: Vec<NodeIdx>,
    enabled: f64,
}

impl ConditionalTable {
    pub fn node(&self) -> NodeIdx {
        self.node
    }

    /// Graph parents, indicators included, in the order `probability` expects.
    pub fn parents(&self) -> &[NodeIdx] {
        &self.parents
    }

    /// `p(node = 1 | parents = config)`.
    pub fn probability(&self, config: &[bool]) -> f64 {
        assert_eq!(config.len(), self.parents.len(), "configuration arity");
        if config.iter().all(|&v| v) {
            self.enabled
        } else {
            0.0
        }
    }

    /// Probability of selection when every parent is 1.
    pub fn enabled_probability(&self) -> f64 {
        self.enabled
    }

    /// Stored entries; the all-ones configuration is the only one kept.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<bool>, f64)> {
        std::iter::once((vec![true; self.parents.len()], self.enabled))
    }
}

#[derive(Clone, Debug)]
pub struct ProbabilisticModel<'g> {
    graph: &'g InteractionGraph,
    ordering: &'g AncestralOrdering,
    /// One table per ordering position.
    tables: Vec<ConditionalTable>,
}

impl<'g> ProbabilisticModel<'g> {
    pub fn graph(&self) -> &'g InteractionGraph {
        self.graph
    }

    pub fn ordering(&self) -> &'g AncestralOrdering {
        self.ordering
    }

    pub fn tables(&self) -> &[ConditionalTable] {
        &self.tables
    }

    pub fn table(&self, node: NodeIdx) -> Option<&ConditionalTable> {
        self.ordering.position(node).map(|p| &self.tables[p])
    }

    /// Overrides the enabled probability of `node`.
    pub fn set_enabled_probability(&mut self, node: NodeIdx, p: f64) {
        let pos = self.ordering.position(node).expect("decision node");
        self.tables[pos].enabled = p.clamp(0.0, 1.0);
    }

    /// Whether `node` can be selected after the earlier decisions in
    /// `selected`: implication parents chosen and no indicator switched off.
    pub(crate) fn enabled(&self, node: NodeIdx, selected: &FixedBitSet) -> bool {
        let here = self.ordering.position(node);
        self.graph.required(node).iter().all(|&p| selected.contains(p))
            && !self
                .graph
                .blocked_by(node)
                .iter()
                .any(|&w| selected.contains(w) && self.ordering.position(w) < here)
    }

    /// Values of `node`'s parents (indicators derived from the earlier
    /// decisions) for a complete node selection.
    pub fn parent_configuration(&self, node: NodeIdx, selected: &FixedBitSet) -> Vec<bool> {
        let here = self.ordering.position(node);
        self.graph
            .parents(node)
            .iter()
            .map(|&p| match self.graph.node(p).watches {
                Some(w) => !(selected.contains(w) && self.ordering.position(w) < here),
                None => selected.contains(p),
            })
            .collect()
    }

    /// Product of the conditional probabilities along the ordering.
    pub fn joint_probability(&self, selected: &FixedBitSet) -> f64 {
        let mut p = 1.0;
        for (pos, &node) in self.ordering.nodes().iter().enumerate() {
            let p1 = if self.enabled(node, selected) {
                self.tables[pos].enabled
            } else {
                0.0
            };
            p *= if selected.contains(node) { p1 } else { 1.0 - p1 };
        }
        p
    }
}

/// Initial model: every node is selected with probability 1/2 whenever its
/// parents allow it.
pub fn build_initial_model<'g>(
    graph: &'g InteractionGraph,
    ordering: &'g AncestralOrdering,
) -> crate::Result<ProbabilisticModel<'g>> {
    let mut tables = Vec::with_capacity(ordering.len());
    for &node in ordering.nodes() {
        let parents = graph.parents(node).to_vec();
        if parents.len() > MAX_PARENTS {
            return Err(crate::Error::Validation(format!(
                "node `{}` has {} parents, above the limit of {MAX_PARENTS}",
                graph.node(node).id,
                parents.len()
            )));
        }
        tables.push(ConditionalTable {
            node,
            parents,
            enabled: 0.5,
        });
    }
    Ok(ProbabilisticModel {
        graph,
        ordering,
        tables,
    })
}

/// Re-estimates every enabled probability from the population with the
/// m-estimator `(N(x=1, pa) + m * p) / (N(pa) + m)`.
pub fn learn_parameters<'g>(
    model: &ProbabilisticModel<'g>,
    population: &Population,
    config: &EdaConfig,
) -> ProbabilisticModel<'g> {
    let graph = model.graph;
    let selections: Vec<FixedBitSet> = population
        .individuals()
        .iter()
        .filter_map(|s| graph.node_selection(s.selected()))
        .collect();
    let m = config.m_equivalent_size;
    let prior = config.prior_p;
    let mut learned = model.clone();
    for (pos, &node) in model.ordering.nodes().iter().enumerate() {
        let (mut parents_on, mut both_on) = (0usize, 0usize);
        for sel in &selections {
            if model.enabled(node, sel) {
                parents_on += 1;
                if sel.contains(node) {
                    both_on += 1;
                }
            }
        }
        let denom = parents_on as f64 + m;
        learned.tables[pos].enabled = if denom > 0.0 {
            (both_on as f64 + m * prior) / denom
        } else {
            prior
        };
    }
    learned
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eda::population::Population;
    use crate::graph::TieBreak;
    use crate::problem::{InteractionSet, NrpInstance, Requirement, Solution};
    use crate::testkit::{five_requirements, ids_of_set, random_instance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn root_starts_at_one_half() {
        let inst = five_requirements();
        let g = InteractionGraph::build(&inst).unwrap();
        let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
        let model = build_initial_model(&g, &ord).unwrap();
        let root = model.table(g.node_index("r01+r05").unwrap()).unwrap();
        assert!(root.parents().is_empty());
        assert_eq!(root.probability(&[]), 0.5);
    }

    #[test]
    fn figure_table_for_r02() {
        let inst = five_requirements();
        let g = InteractionGraph::build(&inst).unwrap();
        let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
        let model = build_initial_model(&g, &ord).unwrap();
        let r02 = g.node_index("r02").unwrap();
        let t = model.table(r02).unwrap();
        let names: Vec<&str> = t.parents().iter().map(|&p| g.node(p).id.as_str()).collect();
        assert_eq!(names, ["r04", "I_r03"]);
        assert_eq!(t.probability(&[true, true]), 0.5);
        assert_eq!(t.probability(&[true, false]), 0.0);
        assert_eq!(t.probability(&[false, true]), 0.0);
        assert_eq!(t.probability(&[false, false]), 0.0);
    }

    #[test]
    fn infeasible_example_has_zero_joint_probability() {
        let inst = five_requirements();
        let g = InteractionGraph::build(&inst).unwrap();
        let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
        let model = build_initial_model(&g, &ord).unwrap();
        let bad = g.node_selection(&ids_of_set(&inst, &["r01", "r05", "r03", "r02"])).unwrap();
        assert_eq!(model.joint_probability(&bad), 0.0);
        let good = g.node_selection(&ids_of_set(&inst, &["r01", "r05", "r03"])).unwrap();
        // r01+r05 = 1, r03 = 1, r04 = 0 (free), r02 forced 0
        assert_eq!(model.joint_probability(&good), 0.125);
    }

    fn population_of(inst: &NrpInstance, sets: &[Vec<usize>], capacity: usize) -> Population {
        let sols = sets
            .iter()
            .map(|s| {
                let mut b = inst.empty_selection();
                s.iter().for_each(|&i| b.insert(i));
                Solution::from_selection(inst, b)
            })
            .collect();
        Population::from_individuals(sols, capacity)
    }

    fn single_root() -> NrpInstance {
        NrpInstance::new(
            "root",
            vec![],
            vec![Requirement::with_satisfaction("a", 1.0, 1.0)],
            InteractionSet::default(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn m_estimator_on_a_root() {
        let inst = single_root();
        let g = InteractionGraph::build(&inst).unwrap();
        let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
        let model = build_initial_model(&g, &ord).unwrap();
        let sets: Vec<Vec<usize>> = (0..10).map(|i| if i < 6 { vec![0] } else { vec![] }).collect();
        let pop = population_of(&inst, &sets, 10);
        let cfg = EdaConfig { m_equivalent_size: 1.0, prior_p: 0.5, ..EdaConfig::for_size(1) };
        let learned = learn_parameters(&model, &pop, &cfg);
        assert_eq!(learned.tables()[0].enabled_probability(), 6.5 / 11.0);
        let freq = learn_parameters(&model, &pop, &EdaConfig { m_equivalent_size: 0.0, ..cfg.clone() });
        assert_eq!(freq.tables()[0].enabled_probability(), 0.6);
        let empty = Population::from_individuals(vec![], 10);
        let fallback = learn_parameters(&model, &empty, &EdaConfig { m_equivalent_size: 0.0, prior_p: 0.3, ..cfg });
        assert_eq!(fallback.tables()[0].enabled_probability(), 0.3);
    }

    /// Counts straight from the requirement sets, with indicators read off
    /// the exclusion pairs and the ordering positions.
    fn counted(inst: &NrpInstance, g: &InteractionGraph, ord: &AncestralOrdering, pop: &Population, node: NodeIdx) -> (usize, usize) {
        let pos: std::collections::HashMap<NodeIdx, usize> =
            ord.nodes().iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let chosen = |s: &Solution, n: NodeIdx| g.node(n).members.iter().all(|&m| s.contains(m));
        let mut np = 0;
        let mut nx = 0;
        for s in pop.individuals() {
            let mut ok = true;
            for &p in g.parents(node) {
                let pn = g.node(p);
                match pn.watches {
                    None => ok &= chosen(s, p),
                    Some(w) => ok &= !(chosen(s, w) && pos[&w] < pos[&node]),
                }
            }
            if ok {
                np += 1;
                if chosen(s, node) {
                    nx += 1;
                }
            }
        }
        let _ = inst;
        (np, nx)
    }

    #[test]
    fn learning_matches_independent_counter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for seed in 0..40 {
            let inst = random_instance(9, 0.6, seed);
            let Ok(g) = InteractionGraph::build(&inst) else { continue };
            let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
            let model = build_initial_model(&g, &ord).unwrap();
            let samples = crate::eda::sampling::sample_pls(&model, &inst, 40, &mut rng);
            let pop = Population::from_individuals(samples, 40);
            let m = rng.gen_range(0.0..3.0);
            let cfg = EdaConfig { m_equivalent_size: m, prior_p: 0.4, ..EdaConfig::for_size(9) };
            let learned = learn_parameters(&model, &pop, &cfg);
            for &node in ord.nodes() {
                let (np, nx) = counted(&inst, &g, &ord, &pop, node);
                let expect = if np as f64 + m > 0.0 { (nx as f64 + m * 0.4) / (np as f64 + m) } else { 0.4 };
                assert!((learned.table(node).unwrap().enabled_probability() - expect).abs() < 1e-12);
            }
            checked += 1;
        }
        assert!(checked > 20);
    }
}
