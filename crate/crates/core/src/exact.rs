//! Exact Pareto fronts: exhaustive enumeration, branch and bound along an
//! ancestral ordering, and block-wise solving with Cartesian recombination.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AncestralOrdering, InteractionGraph, NodeIdx, TieBreak};
use crate::metrics::{nondominated_filter, Front};
use crate::problem::{InteractionSet, NrpInstance, Requirement, Solution};

/// Default largest instance enumerated exhaustively.
pub const BRUTE_FORCE_LIMIT: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactSolver {
    Brute,
    Bnb,
}

/// Branch-and-bound tree accounting. The full tree over `k` decision
/// variables has `2^(k+1) - 1` nodes including the empty root; `explored`
/// counts generated nodes and the two `pruned_*` counters count the nodes
/// below a rejected node that were never generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub tree_nodes: u64,
    pub explored: u64,
    pub rejected: u64,
    pub pruned_interaction: u64,
    pub pruned_effort: u64,
}

impl SearchStats {
    pub fn pruned(&self) -> u64 {
        self.pruned_interaction.saturating_add(self.pruned_effort)
    }

    pub fn pruned_fraction(&self) -> f64 {
        self.pruned() as f64 / self.tree_nodes as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchAndBoundOptions {
    /// Also reject a branch as soon as its effort exceeds the limit.
    pub effort_pruning: bool,
}

impl Default for BranchAndBoundOptions {
    fn default() -> Self {
        BranchAndBoundOptions { effort_pruning: true }
    }
}

/// Node of the branch-and-bound frontier: decisions for a prefix of the
/// ancestral ordering.
#[derive(Clone, Debug)]
pub struct PartialSolution {
    pub selected: FixedBitSet,
    pub effort_so_far: f64,
}

fn subtree_below(levels_left: usize) -> u64 {
    // nodes strictly below a node with `levels_left` undecided variables
    if levels_left >= 63 {
        u64::MAX
    } else {
        (1u64 << (levels_left + 1)) - 2
    }
}

/// Front from the branch-and-bound search with effort pruning enabled.
pub fn branch_and_bound_front(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    ordering: &AncestralOrdering,
) -> (Front, SearchStats) {
    branch_and_bound_with(instance, graph, ordering, BranchAndBoundOptions::default())
}

pub fn branch_and_bound_with(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    ordering: &AncestralOrdering,
    options: BranchAndBoundOptions,
) -> (Front, SearchStats) {
    let (valid, stats) = branch_and_bound_valid(instance, graph, ordering, options);
    (nondominated_filter(instance.name.clone(), valid), stats)
}

/// All feasible solutions reached by the search (leaves within the limit).
fn branch_and_bound_valid(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    ordering: &AncestralOrdering,
    options: BranchAndBoundOptions,
) -> (Vec<Solution>, SearchStats) {
    let k = ordering.len();
    let limit = instance.effort_limit;
    let mut stats = SearchStats {
        tree_nodes: subtree_below(k).saturating_add(1),
        explored: 1,
        ..Default::default()
    };
    let mut partials = vec![PartialSolution {
        selected: graph.empty_node_set(),
        effort_so_far: 0.0,
    }];
    for (depth, &node) in ordering.nodes().iter().enumerate() {
        let below = subtree_below(k - depth - 1);
        let effort = graph.node(node).effort;
        let mut modified = Vec::with_capacity(partials.len() * 2);
        for partial in partials {
            stats.explored += 2;
            let fits_interactions = graph.can_add(node, &partial.selected);
            let fits_effort = !options.effort_pruning || partial.effort_so_far + effort <= limit;
            if fits_interactions && fits_effort {
                let mut with = partial.clone();
                with.selected.insert(node);
                with.effort_so_far += effort;
                modified.push(partial);
                modified.push(with);
            } else {
                stats.rejected += 1;
                if fits_interactions {
                    stats.pruned_effort = stats.pruned_effort.saturating_add(below);
                } else {
                    stats.pruned_interaction = stats.pruned_interaction.saturating_add(below);
                }
                modified.push(partial);
            }
        }
        partials = modified;
    }
    let solutions = partials
        .into_iter()
        .map(|p| Solution::from_selection(instance, graph.expand(&p.selected)))
        .filter(|s| s.effort() <= limit)
        .collect();
    (solutions, stats)
}

/// Requirement-mask view of the transformed graph for fast enumeration.
struct MaskChecker {
    /// Members of each merged node; must be all-or-nothing.
    groups: Vec<u64>,
    /// `(members, required members, forbidden members)` per decision node.
    rules: Vec<(u64, u64, u64)>,
}

impl MaskChecker {
    fn new(graph: &InteractionGraph) -> Self {
        let members = |n: NodeIdx| graph.node(n).members.iter().fold(0u64, |m, &r| m | 1 << r);
        let mut groups = Vec::new();
        let mut rules = Vec::new();
        for node in graph.decision_nodes() {
            let own = members(node);
            if graph.node(node).members.len() > 1 {
                groups.push(own);
            }
            let required = graph.required(node).iter().fold(0, |m, &p| m | members(p));
            let forbidden = graph.blocked_by(node).iter().fold(0, |m, &w| m | members(w));
            if required != 0 || forbidden != 0 {
                rules.push((own, required, forbidden));
            }
        }
        MaskChecker { groups, rules }
    }

    fn valid(&self, mask: u64) -> bool {
        self.groups.iter().all(|&g| mask & g == 0 || mask & g == g)
            && self
                .rules
                .iter()
                .all(|&(own, req, forb)| mask & own == 0 || (mask & req == req && mask & forb == 0))
    }
}

fn brute_force_valid(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    limit: usize,
) -> Result<Vec<Solution>> {
    let n = instance.len();
    if n > limit.min(63) {
        return Err(Error::SizeGuard {
            what: format!("instance `{}`", instance.name),
            size: n,
            limit: limit.min(63),
        });
    }
    let checker = MaskChecker::new(graph);
    let efforts: Vec<f64> = instance.requirements.iter().map(|r| r.effort).collect();
    let mut out = Vec::new();
    for mask in 0..(1u64 << n) {
        if !checker.valid(mask) {
            continue;
        }
        let mut effort = 0.0;
        let mut rest = mask;
        while rest != 0 {
            effort += efforts[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        if effort > instance.effort_limit {
            continue;
        }
        let mut bits = instance.empty_selection();
        (0..n).filter(|&i| mask >> i & 1 == 1).for_each(|i| bits.insert(i));
        out.push(Solution::from_selection(instance, bits));
    }
    Ok(out)
}

/// Enumerates every subset of requirements, keeps the feasible ones and
/// returns the non-dominated set. Refuses instances above
/// [`BRUTE_FORCE_LIMIT`] requirements.
pub fn brute_force_front(instance: &NrpInstance, graph: &InteractionGraph) -> Result<Front> {
    brute_force_front_with_limit(instance, graph, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_front_with_limit(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    limit: usize,
) -> Result<Front> {
    let valid = brute_force_valid(instance, graph, limit)?;
    Ok(nondominated_filter(instance.name.clone(), valid))
}

/// Checks a partition of requirement ids and returns each block as indices.
pub fn validate_partition<S: AsRef<str>>(
    instance: &NrpInstance,
    partition: &[Vec<S>],
) -> Result<Vec<Vec<usize>>> {
    let mut block_of = vec![usize::MAX; instance.len()];
    let mut blocks = Vec::with_capacity(partition.len());
    for (b, block) in partition.iter().enumerate() {
        let mut idx = Vec::with_capacity(block.len());
        for id in block {
            let id = id.as_ref();
            let i = instance
                .index_of(id)
                .ok_or_else(|| Error::Partition(format!("unknown requirement `{id}` in block {b}")))?;
            if block_of[i] != usize::MAX {
                return Err(Error::Partition(format!(
                    "requirement `{id}` appears in blocks {} and {b}",
                    block_of[i]
                )));
            }
            block_of[i] = b;
            idx.push(i);
        }
        idx.sort_unstable();
        blocks.push(idx);
    }
    if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
        return Err(Error::Partition(format!(
            "requirement `{}` is not covered by any block",
            instance.requirements[i].id
        )));
    }
    for (kind, a, b) in instance.interactions.pairs() {
        let (ba, bb) = (block_of[instance.index_of(a).unwrap()], block_of[instance.index_of(b).unwrap()]);
        if ba != bb {
            return Err(Error::Partition(format!(
                "{kind} ({a}, {b}) crosses blocks {ba} and {bb}"
            )));
        }
    }
    Ok(blocks)
}

fn sub_instance(instance: &NrpInstance, block: &[usize], b: usize) -> Result<NrpInstance> {
    let members: HashSet<&str> = block.iter().map(|&i| instance.requirements[i].id.as_str()).collect();
    let inside = |pairs: &[(String, String)]| {
        pairs
            .iter()
            .filter(|(a, _)| members.contains(a.as_str()))
            .cloned()
            .collect::<Vec<_>>()
    };
    let i = &instance.interactions;
    NrpInstance::new(
        format!("{}#block{b}", instance.name),
        vec![],
        block
            .iter()
            .map(|&r| {
                let req = &instance.requirements[r];
                Requirement::with_satisfaction(req.id.clone(), req.effort, req.satisfaction)
            })
            .collect(),
        InteractionSet {
            implications: inside(&i.implications),
            combinations: inside(&i.combinations),
            exclusions: inside(&i.exclusions),
        },
        instance.effort_limit,
    )
}

/// Solves each block of an interaction-closed partition exactly and combines
/// the per-block solution sets by Cartesian product, discarding combinations
/// above the effort limit, then keeps the non-dominated set.
///
/// Each block's set is reduced to its own non-dominated subset before the
/// product, and the running product is reduced after every block; a solution
/// built from a dominated block part is itself dominated, so the result is
/// unchanged.
pub fn split_and_combine<S: AsRef<str> + Sync>(
    instance: &NrpInstance,
    partition: &[Vec<S>],
    solver: ExactSolver,
) -> Result<Front> {
    let blocks = validate_partition(instance, partition)?;
    let per_block: Vec<Result<Vec<FixedBitSet>>> = blocks
        .par_iter()
        .enumerate()
        .map(|(b, block)| {
            let sub = sub_instance(instance, block, b)?;
            let graph = InteractionGraph::build(&sub)?;
            let valid = match solver {
                ExactSolver::Brute => brute_force_valid(&sub, &graph, BRUTE_FORCE_LIMIT)?,
                ExactSolver::Bnb => {
                    let ordering = graph.ancestral_ordering(TieBreak::LowestId)?;
                    branch_and_bound_valid(&sub, &graph, &ordering, BranchAndBoundOptions::default()).0
                }
            };
            // lift block-local selections back to instance indices
            let front = nondominated_filter(sub.name.clone(), valid);
            Ok(front
                .solutions()
                .iter()
                .map(|s| {
                    let mut bits = instance.empty_selection();
                    s.selected().ones().for_each(|local| bits.insert(block[local]));
                    bits
                })
                .collect())
        })
        .collect();

    let mut combined = vec![Solution::empty(instance)];
    for block in per_block {
        let block = block?;
        let mut next = Vec::with_capacity(combined.len() * block.len().max(1));
        for base in &combined {
            for part in &block {
                let mut bits = base.selected().clone();
                bits.union_with(part);
                let sol = Solution::from_selection(instance, bits);
                if sol.effort() <= instance.effort_limit {
                    next.push(sol);
                }
            }
        }
        combined = nondominated_filter(instance.name.clone(), next).into_solutions();
    }
    Ok(nondominated_filter(instance.name.clone(), combined))
}

/// Exact front for the whole instance using `solver`.
pub fn solve_exact(instance: &NrpInstance, graph: &InteractionGraph, solver: ExactSolver) -> Result<Front> {
    match solver {
        ExactSolver::Brute => brute_force_front(instance, graph),
        ExactSolver::Bnb => {
            let ordering = graph.ancestral_ordering(TieBreak::LowestId)?;
            Ok(branch_and_bound_front(instance, graph, &ordering).0)
        }
    }
}

/// Helper for tests and reporting: requirement sets of a front keyed by point.
pub fn front_signature(front: &Front) -> Vec<(u64, u64, Vec<usize>)> {
    let mut sig: Vec<_> = front
        .solutions()
        .iter()
        .map(|s| (s.effort().to_bits(), s.satisfaction().to_bits(), s.indices()))
        .collect();
    sig.sort();
    sig
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TieBreak;
    use crate::problem::{is_feasible, Client};
    use crate::testkit::{five_requirements, five_requirements_with_limit, random_instance_with_ratio, raw_valid};

    /// Front computed with nothing but the raw interaction pairs.
    fn raw_front(inst: &NrpInstance) -> Front {
        let n = inst.len();
        let mut sols = Vec::new();
        for mask in 0u32..(1 << n) {
            let mut bits = inst.empty_selection();
            (0..n).filter(|&b| mask >> b & 1 == 1).for_each(|b| bits.insert(b));
            if !raw_valid(inst, &bits) {
                continue;
            }
            let s = Solution::from_selection(inst, bits);
            if s.effort() <= inst.effort_limit {
                sols.push(s);
            }
        }
        nondominated_filter(inst.name.clone(), sols)
    }

    #[test]
    fn figure_tree_prunes_eight_of_thirty_one() {
        let inst = five_requirements_with_limit(100.0);
        let g = InteractionGraph::build(&inst).unwrap();
        let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
        let (_, stats) =
            branch_and_bound_with(&inst, &g, &ord, BranchAndBoundOptions { effort_pruning: false });
        assert_eq!(stats.tree_nodes, 31);
        assert_eq!(stats.explored, 23);
        assert_eq!(stats.pruned(), 8);
        assert_eq!(stats.pruned_effort, 0);
        assert_eq!(format!("{:.2}", 100.0 * stats.pruned_fraction()), "25.81");
    }

    #[test]
    fn five_requirement_front_matches_raw() {
        for limit in [0.0, 3.0, 5.0, 8.0, 12.0, 100.0] {
            let inst = five_requirements_with_limit(limit);
            let g = InteractionGraph::build(&inst).unwrap();
            let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
            let raw = raw_front(&inst);
            assert_eq!(front_signature(&brute_force_front(&inst, &g).unwrap()), front_signature(&raw));
            assert_eq!(front_signature(&branch_and_bound_front(&inst, &g, &ord).0), front_signature(&raw));
        }
    }

    #[test]
    fn single_requirement() {
        let inst = NrpInstance::new(
            "one",
            vec![],
            vec![Requirement::with_satisfaction("r", 3.0, 5.0)],
            InteractionSet::default(),
            10.0,
        )
        .unwrap();
        let g = InteractionGraph::build(&inst).unwrap();
        let f = brute_force_front(&inst, &g).unwrap();
        // the empty set is kept: nothing of zero effort beats it
        assert_eq!(f.points(), [(0.0, 0.0), (5.0, 3.0)]);
    }

    #[test]
    fn zero_budget_keeps_only_zero_effort() {
        let inst = five_requirements_with_limit(0.0);
        let g = InteractionGraph::build(&inst).unwrap();
        let f = brute_force_front(&inst, &g).unwrap();
        assert!(f.solutions().iter().all(|s| s.effort() == 0.0));
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn unconstrained_full_budget_prunes_nothing() {
        let inst = random_instance_with_ratio(10, 0.0, 1.0, 17);
        let inst = inst.with_effort_limit(inst.total_effort()).unwrap();
        let g = InteractionGraph::build(&inst).unwrap();
        let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
        let (_, stats) = branch_and_bound_front(&inst, &g, &ord);
        assert_eq!(stats.pruned(), 0);
        assert_eq!(stats.explored, stats.tree_nodes);
    }

    #[test]
    fn size_guard() {
        let inst = random_instance_with_ratio(12, 0.0, 0.5, 1);
        let g = InteractionGraph::build(&inst).unwrap();
        assert!(matches!(
            brute_force_front_with_limit(&inst, &g, 10),
            Err(Error::SizeGuard { size: 12, limit: 10, .. })
        ));
    }

    #[test]
    fn bnb_matches_brute_force_on_random_instances() {
        let mut count = 0;
        for seed in 0..150u64 {
            let n = 6 + (seed % 9) as usize;
            let density = [0.0, 0.1, 0.3][(seed % 3) as usize];
            let ratio = [0.3, 0.5, 0.75][(seed / 3 % 3) as usize];
            let inst = random_instance_with_ratio(n, density, ratio, seed);
            let Ok(g) = InteractionGraph::build(&inst) else { continue };
            let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
            let brute = brute_force_front(&inst, &g).unwrap();
            let (bnb, _) = branch_and_bound_front(&inst, &g, &ord);
            assert_eq!(front_signature(&bnb), front_signature(&brute), "seed {seed}");
            assert_eq!(front_signature(&brute), front_signature(&raw_front(&inst)), "seed {seed}");
            assert!(bnb.solutions().iter().all(|s| is_feasible(s, &inst, &g)));
            count += 1;
        }
        assert!(count >= 100);
    }

    #[test]
    fn front_is_ordering_invariant() {
        let inst = five_requirements();
        let g = InteractionGraph::build(&inst).unwrap();
        let s1 = AncestralOrdering::from_ids(&g, &["r01+r05", "r03", "r04", "r02"]).unwrap();
        let s2 = AncestralOrdering::from_ids(&g, &["r01+r05", "r04", "r03", "r02"]).unwrap();
        let (f1, _) = branch_and_bound_front(&inst, &g, &s1);
        let (f2, _) = branch_and_bound_front(&inst, &g, &s2);
        assert_eq!(front_signature(&f1), front_signature(&f2));
    }

    #[test]
    fn adding_an_implication_never_reduces_pruning() {
        for seed in 0..40u64 {
            let base = random_instance_with_ratio(9, 0.0, 0.5, seed);
            let mut constrained = base.interactions.clone();
            constrained.implications.push(("r00".into(), format!("r{:02}", 1 + seed % 8)));
            let more = NrpInstance::new(
                base.name.clone(),
                vec![],
                base.requirements.clone(),
                constrained,
                base.effort_limit,
            )
            .unwrap();
            let g0 = InteractionGraph::build(&base).unwrap();
            let g1 = InteractionGraph::build(&more).unwrap();
            let o1 = g1.ancestral_ordering(TieBreak::LowestId).unwrap();
            let o0 = AncestralOrdering::from_ids(&g0, &o1.ids(&g1)).unwrap();
            let opts = BranchAndBoundOptions { effort_pruning: true };
            let p0 = branch_and_bound_with(&base, &g0, &o0, opts).1.pruned();
            let p1 = branch_and_bound_with(&more, &g1, &o1, opts).1.pruned();
            assert!(p1 >= p0, "seed {seed}: {p1} < {p0}");
        }
    }

    fn two_block_instance(seed: u64) -> (NrpInstance, Vec<Vec<String>>) {
        let a = random_instance_with_ratio(8, 0.3, 0.5, seed);
        let b = random_instance_with_ratio(8, 0.3, 0.5, seed + 1000);
        let rename = |inst: &NrpInstance, p: &str| -> (Vec<Requirement>, InteractionSet) {
            let r = |id: &String| format!("{p}{id}");
            let reqs = inst
                .requirements
                .iter()
                .map(|q| Requirement::with_satisfaction(r(&q.id), q.effort, q.satisfaction))
                .collect();
            let map = |v: &Vec<(String, String)>| v.iter().map(|(x, y)| (r(x), r(y))).collect::<Vec<_>>();
            let i = &inst.interactions;
            (reqs, InteractionSet {
                implications: map(&i.implications),
                combinations: map(&i.combinations),
                exclusions: map(&i.exclusions),
            })
        };
        let (mut ra, mut ia) = rename(&a, "a");
        let (rb, ib) = rename(&b, "b");
        let partition = vec![
            ra.iter().map(|r| r.id.clone()).collect(),
            rb.iter().map(|r| r.id.clone()).collect(),
        ];
        ra.extend(rb);
        ia.implications.extend(ib.implications);
        ia.combinations.extend(ib.combinations);
        ia.exclusions.extend(ib.exclusions);
        let total: f64 = ra.iter().map(|r| r.effort).sum();
        let inst = NrpInstance::new(format!("pair{seed}"), vec![], ra, ia, (0.4 * total).floor()).unwrap();
        (inst, partition)
    }

    #[test]
    fn split_matches_whole_brute_force() {
        let mut checked = 0;
        for seed in 0..30 {
            let (inst, partition) = two_block_instance(seed);
            let Ok(g) = InteractionGraph::build(&inst) else { continue };
            let whole = brute_force_front(&inst, &g).unwrap();
            for solver in [ExactSolver::Brute, ExactSolver::Bnb] {
                let split = split_and_combine(&inst, &partition, solver).unwrap();
                assert_eq!(front_signature(&split), front_signature(&whole), "seed {seed}");
            }
            checked += 1;
        }
        assert!(checked >= 20);
    }

    #[test]
    fn single_block_and_empty_block() {
        let inst = five_requirements();
        let g = InteractionGraph::build(&inst).unwrap();
        let all: Vec<String> = inst.requirements.iter().map(|r| r.id.clone()).collect();
        let direct = brute_force_front(&inst, &g).unwrap();
        let one = split_and_combine(&inst, std::slice::from_ref(&all), ExactSolver::Bnb).unwrap();
        assert_eq!(front_signature(&one), front_signature(&direct));
        let with_empty = split_and_combine(&inst, &[all, vec![]], ExactSolver::Brute).unwrap();
        assert_eq!(front_signature(&with_empty), front_signature(&direct));
    }

    #[test]
    fn crossing_interaction_is_rejected() {
        let inst = five_requirements();
        let err = split_and_combine(
            &inst,
            &[vec!["r01", "r02", "r03"], vec!["r04", "r05"]],
            ExactSolver::Brute,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Partition(_)));
        assert!(err.to_string().contains("r01"), "{err}");
        let uncovered = split_and_combine(&inst, &[vec!["r01", "r05"]], ExactSolver::Brute);
        assert!(matches!(uncovered, Err(Error::Partition(_))));
    }

    #[test]
    fn split_works_with_clients() {
        let inst = NrpInstance::new(
            "cl",
            vec![Client { id: "c".into(), weight: 2.0 }],
            vec![
                Requirement::with_client_values("x", 1.0, [("c", 3.0)]),
                Requirement::with_client_values("y", 2.0, [("c", 1.0)]),
            ],
            InteractionSet::default(),
            2.0,
        )
        .unwrap();
        let g = InteractionGraph::build(&inst).unwrap();
        let split = split_and_combine(&inst, &[vec!["x"], vec!["y"]], ExactSolver::Bnb).unwrap();
        assert_eq!(front_signature(&split), front_signature(&brute_force_front(&inst, &g).unwrap()));
    }
}
