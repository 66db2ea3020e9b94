//! The functional interaction graph and its transformation into an
//! implication-only DAG.
//!
//! Construction happens in two passes:
//!
//! 1. [`merge_combinations`] collapses every connected component of the
//!    combination relation into a single merged node whose satisfaction and
//!    effort are the sums over its members, and rewrites implications and
//!    exclusions onto the merged nodes.
//! 2. [`InteractionGraph::transform_exclusions`] replaces each exclusion
//!    `(u, v)` with two indicator nodes `I_u -> v` and `I_v -> u`. An
//!    indicator is 1 until the node it watches is selected, after which it is
//!    0 and blocks its child.
//!
//! After both passes only directed edges remain and the decision variables
//! (non-indicator nodes) can be visited in an [`AncestralOrdering`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::NrpInstance;

pub type NodeIdx = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Requirement,
    Merged,
    Indicator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub id: String,
    /// Original requirement indices. For an indicator these are the members
    /// of the node it watches.
    pub members: Vec<usize>,
    pub satisfaction: f64,
    pub effort: f64,
    /// Indicators only: the node whose selection switches this indicator to 0.
    pub watches: Option<NodeIdx>,
}

impl GraphNode {
    pub fn is_indicator(&self) -> bool {
        self.kind == NodeKind::Indicator
    }
}

#[derive(Clone, Debug)]
pub struct InteractionGraph {
    origin: String,
    requirement_count: usize,
    nodes: Vec<GraphNode>,
    /// Directed `(parent, child)` pairs, sorted and unique.
    edges: Vec<(NodeIdx, NodeIdx)>,
    /// Exclusions not yet turned into indicators.
    exclusions: Vec<(NodeIdx, NodeIdx)>,
    node_of: Vec<NodeIdx>,
    parents: Vec<Vec<NodeIdx>>,
    required: Vec<Vec<NodeIdx>>,
    blocked_by: Vec<Vec<NodeIdx>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// First transformation pass: combination components become merged nodes.
pub fn merge_combinations(instance: &NrpInstance) -> Result<InteractionGraph> {
    let n = instance.len();
    let idx = |id: &str| {
        instance
            .index_of(id)
            .ok_or_else(|| Error::UnknownRequirement(id.to_string()))
    };

    let mut uf = UnionFind::new(n);
    for (a, b) in &instance.interactions.combinations {
        uf.union(idx(a)?, idx(b)?);
    }
    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        components.entry(uf.find(i)).or_default().push(i);
    }

    let mut nodes = Vec::new();
    let mut node_of = vec![usize::MAX; n];
    for i in 0..n {
        if node_of[i] != usize::MAX {
            continue;
        }
        let members = &components[&uf.find(i)];
        let node = if members.len() == 1 {
            let r = &instance.requirements[i];
            GraphNode {
                kind: NodeKind::Requirement,
                id: r.id.clone(),
                members: vec![i],
                satisfaction: r.satisfaction,
                effort: r.effort,
                watches: None,
            }
        } else {
            let mut ids: Vec<&str> = members
                .iter()
                .map(|&m| instance.requirements[m].id.as_str())
                .collect();
            ids.sort_unstable();
            GraphNode {
                kind: NodeKind::Merged,
                id: ids.join("+"),
                members: members.clone(),
                satisfaction: members.iter().map(|&m| instance.requirements[m].satisfaction).sum(),
                effort: members.iter().map(|&m| instance.requirements[m].effort).sum(),
                watches: None,
            }
        };
        for &m in &node.members {
            node_of[m] = nodes.len();
        }
        nodes.push(node);
    }

    let mut edges = BTreeSet::new();
    for (a, b) in &instance.interactions.implications {
        let (u, v) = (node_of[idx(a)?], node_of[idx(b)?]);
        // an implication inside a merged node is satisfied by construction
        if u != v {
            edges.insert((u, v));
        }
    }

    let mut exclusions = Vec::new();
    let mut seen = HashSet::new();
    for (a, b) in &instance.interactions.exclusions {
        let (u, v) = (node_of[idx(a)?], node_of[idx(b)?]);
        if u == v {
            return Err(Error::Contradiction(format!(
                "exclusion ({a}, {b}) falls inside combined node `{}`",
                nodes[u].id
            )));
        }
        if edges.contains(&(u, v)) || edges.contains(&(v, u)) {
            return Err(Error::Contradiction(format!(
                "`{}` and `{}` are linked by both an implication and an exclusion",
                nodes[u].id, nodes[v].id
            )));
        }
        if seen.insert((u.min(v), u.max(v))) {
            exclusions.push((u, v));
        }
    }

    Ok(InteractionGraph::assemble(
        instance.name.clone(),
        n,
        nodes,
        edges.into_iter().collect(),
        exclusions,
        node_of,
    ))
}

impl InteractionGraph {
    fn assemble(
        origin: String,
        requirement_count: usize,
        nodes: Vec<GraphNode>,
        edges: Vec<(NodeIdx, NodeIdx)>,
        exclusions: Vec<(NodeIdx, NodeIdx)>,
        node_of: Vec<NodeIdx>,
    ) -> Self {
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut required = vec![Vec::new(); nodes.len()];
        let mut blocked_by = vec![Vec::new(); nodes.len()];
        for &(p, c) in &edges {
            parents[c].push(p);
            match nodes[p].watches {
                Some(w) => blocked_by[c].push(w),
                None => required[c].push(p),
            }
        }
        InteractionGraph {
            origin,
            requirement_count,
            nodes,
            edges,
            exclusions,
            node_of,
            parents,
            required,
            blocked_by,
        }
    }

    /// Runs both transformation passes and checks the result is acyclic.
    pub fn build(instance: &NrpInstance) -> Result<Self> {
        let graph = merge_combinations(instance)?.transform_exclusions();
        graph.ancestral_ordering(TieBreak::LowestId)?;
        Ok(graph)
    }

    /// Second transformation pass: every exclusion becomes a pair of
    /// indicator nodes. A graph with no pending exclusions is returned as is.
    pub fn transform_exclusions(&self) -> InteractionGraph {
        if self.exclusions.is_empty() {
            return self.clone();
        }
        let mut degree: HashMap<NodeIdx, usize> = HashMap::new();
        for &(u, v) in &self.exclusions {
            *degree.entry(u).or_default() += 1;
            *degree.entry(v).or_default() += 1;
        }
        let mut nodes = self.nodes.clone();
        let mut edges: BTreeSet<(NodeIdx, NodeIdx)> = self.edges.iter().copied().collect();
        let mut add_indicator = |watched: NodeIdx, target: NodeIdx, nodes: &mut Vec<GraphNode>| {
            let id = if degree[&watched] == 1 {
                format!("I_{}", nodes[watched].id)
            } else {
                format!("I_{}@{}", nodes[watched].id, nodes[target].id)
            };
            let node = GraphNode {
                kind: NodeKind::Indicator,
                id,
                members: nodes[watched].members.clone(),
                satisfaction: 0.0,
                effort: 0.0,
                watches: Some(watched),
            };
            nodes.push(node);
            edges.insert((nodes.len() - 1, target));
        };
        for &(u, v) in &self.exclusions {
            add_indicator(u, v, &mut nodes);
            add_indicator(v, u, &mut nodes);
        }
        InteractionGraph::assemble(
            self.origin.clone(),
            self.requirement_count,
            nodes,
            edges.into_iter().collect(),
            Vec::new(),
            self.node_of.clone(),
        )
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, idx: NodeIdx) -> &GraphNode {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIdx> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn edges(&self) -> &[(NodeIdx, NodeIdx)] {
        &self.edges
    }

    /// Exclusions still waiting for [`Self::transform_exclusions`].
    pub fn pending_exclusions(&self) -> &[(NodeIdx, NodeIdx)] {
        &self.exclusions
    }

    pub fn parents(&self, node: NodeIdx) -> &[NodeIdx] {
        &self.parents[node]
    }

    /// Non-indicator parents of `node`; all must be selected before it.
    pub fn required(&self, node: NodeIdx) -> &[NodeIdx] {
        &self.required[node]
    }

    /// Nodes watched by the indicator parents of `node`; none may be selected
    /// together with it.
    pub fn blocked_by(&self, node: NodeIdx) -> &[NodeIdx] {
        &self.blocked_by[node]
    }

    pub fn node_of_requirement(&self, requirement: usize) -> NodeIdx {
        self.node_of[requirement]
    }

    pub fn requirement_count(&self) -> usize {
        self.requirement_count
    }

    pub fn indicator_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_indicator()).count()
    }

    pub fn decision_nodes(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].is_indicator())
    }

    pub fn decision_count(&self) -> usize {
        self.nodes.len() - self.indicator_count()
    }

    pub fn empty_node_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.nodes.len())
    }

    /// Node selection for a requirement selection, or `None` when some merged
    /// node is only partially selected.
    pub fn node_selection(&self, requirements: &FixedBitSet) -> Option<FixedBitSet> {
        let mut selected = self.empty_node_set();
        for r in requirements.ones() {
            selected.insert(self.node_of[r]);
        }
        for node in selected.ones() {
            if !self.nodes[node].members.iter().all(|&m| requirements.contains(m)) {
                return None;
            }
        }
        Some(selected)
    }

    /// Expands selected nodes back to original requirement indices.
    pub fn expand(&self, nodes: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.requirement_count);
        for node in nodes.ones() {
            for &m in &self.nodes[node].members {
                out.insert(m);
            }
        }
        out
    }

    /// Whether `node` may be added to `selected` given what is already there.
    pub fn can_add(&self, node: NodeIdx, selected: &FixedBitSet) -> bool {
        self.required[node].iter().all(|&p| selected.contains(p))
            && !self.blocked_by[node].iter().any(|&w| selected.contains(w))
    }

    /// Every selected node has all its implication parents selected and none
    /// of its indicator parents switched off.
    pub fn is_valid(&self, selected: &FixedBitSet) -> bool {
        selected.ones().all(|node| {
            node < self.nodes.len() && !self.nodes[node].is_indicator() && self.can_add(node, selected)
        }) && self.exclusions.iter().all(|&(u, v)| !(selected.contains(u) && selected.contains(v)))
    }

    /// [`Self::is_valid`] on a selection of original requirements.
    pub fn is_valid_selection(&self, requirements: &FixedBitSet) -> bool {
        self.node_selection(requirements)
            .is_some_and(|nodes| self.is_valid(&nodes))
    }

    /// Topological order of the decision nodes. Among ready nodes the one
    /// ranked first by `tie_break` goes next.
    pub fn ancestral_ordering(&self, tie_break: TieBreak) -> Result<AncestralOrdering> {
        let decision: Vec<NodeIdx> = self.decision_nodes().collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut children = vec![Vec::new(); self.nodes.len()];
        for &(p, c) in &self.edges {
            if !self.nodes[p].is_indicator() {
                indegree[c] += 1;
                children[p].push(c);
            }
        }
        let key = |i: NodeIdx| match tie_break {
            TieBreak::LowestId => (self.nodes[i].id.clone(), i),
            TieBreak::InputOrder => (String::new(), i),
        };
        let mut ready: BTreeSet<(String, NodeIdx)> = decision
            .iter()
            .filter(|&&i| indegree[i] == 0)
            .map(|&i| key(i))
            .collect();
        let mut order = Vec::with_capacity(decision.len());
        while let Some(first) = ready.pop_first() {
            let node = first.1;
            order.push(node);
            for &c in &children[node] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(key(c));
                }
            }
        }
        if order.len() < decision.len() {
            return Err(Error::Cycle(self.find_cycle(&indegree)));
        }
        Ok(AncestralOrdering::new_unchecked(self, order))
    }

    fn find_cycle(&self, indegree: &[usize]) -> Vec<String> {
        // Every node left with positive indegree lies on or downstream of a
        // cycle; walking parents backwards inside that set must revisit a node.
        let stuck: HashSet<NodeIdx> = self
            .decision_nodes()
            .filter(|&i| indegree[i] > 0)
            .collect();
        let Some(&start) = stuck.iter().min() else {
            return Vec::new();
        };
        let mut path = vec![start];
        let mut pos: HashMap<NodeIdx, usize> = HashMap::from([(start, 0)]);
        let mut cur = start;
        loop {
            let next = *self.required[cur]
                .iter()
                .find(|p| stuck.contains(p))
                .expect("stuck node has a stuck parent");
            if let Some(&at) = pos.get(&next) {
                let mut cycle: Vec<String> =
                    path[at..].iter().rev().map(|&i| self.nodes[i].id.clone()).collect();
                cycle.push(cycle[0].clone());
                return cycle;
            }
            pos.insert(next, path.len());
            path.push(next);
            cur = next;
        }
    }

    /// Graphviz rendering; pending exclusions are drawn as dashed undirected arcs.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(&self.origin));
        for n in &self.nodes {
            let (kind, shape) = match n.kind {
                NodeKind::Requirement => ("requirement", "ellipse"),
                NodeKind::Merged => ("merged", "ellipse"),
                NodeKind::Indicator => ("indicator", "box"),
            };
            let _ = writeln!(
                out,
                "  \"{id}\" [label=\"{id}\\n{kind}\", shape={shape}];",
                id = escape(&n.id)
            );
        }
        for &(p, c) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                escape(&self.nodes[p].id),
                escape(&self.nodes[c].id)
            );
        }
        for &(u, v) in &self.exclusions {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [dir=none, style=dashed, label=\"excludes\"];",
                escape(&self.nodes[u].id),
                escape(&self.nodes[v].id)
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Smallest node id (string order) first.
    #[default]
    LowestId,
    /// Earliest node in instance order first.
    InputOrder,
}

/// A sequence of decision nodes in which every implication parent precedes
/// its child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AncestralOrdering {
    order: Vec<NodeIdx>,
    position: Vec<Option<usize>>,
}

impl AncestralOrdering {
    fn new_unchecked(graph: &InteractionGraph, order: Vec<NodeIdx>) -> Self {
        let mut position = vec![None; graph.nodes.len()];
        for (i, &n) in order.iter().enumerate() {
            position[n] = Some(i);
        }
        AncestralOrdering { order, position }
    }

    /// Builds an ordering from node ids, checking it covers every decision
    /// node exactly once and respects all implication edges.
    pub fn from_ids<S: AsRef<str>>(graph: &InteractionGraph, ids: &[S]) -> Result<Self> {
        let mut order = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let idx = graph
                .node_index(id)
                .ok_or_else(|| Error::Validation(format!("unknown node `{id}` in ordering")))?;
            if graph.nodes[idx].is_indicator() {
                return Err(Error::Validation(format!("indicator `{id}` cannot be ordered")));
            }
            order.push(idx);
        }
        let ordering = Self::new_unchecked(graph, order);
        ordering.check(graph)?;
        Ok(ordering)
    }

    pub fn check(&self, graph: &InteractionGraph) -> Result<()> {
        let mut seen = HashSet::new();
        for &n in &self.order {
            if !seen.insert(n) {
                return Err(Error::Validation(format!(
                    "node `{}` appears twice in ordering",
                    graph.nodes[n].id
                )));
            }
        }
        if seen.len() != graph.decision_count() {
            return Err(Error::Validation(format!(
                "ordering covers {} of {} decision nodes",
                seen.len(),
                graph.decision_count()
            )));
        }
        for &(p, c) in &graph.edges {
            if graph.nodes[p].is_indicator() {
                continue;
            }
            if self.position[p] >= self.position[c] {
                return Err(Error::Validation(format!(
                    "ordering places `{}` before its parent `{}`",
                    graph.nodes[c].id, graph.nodes[p].id
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeIdx] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn position(&self, node: NodeIdx) -> Option<usize> {
        self.position.get(node).copied().flatten()
    }

    pub fn ids<'a>(&'a self, graph: &'a InteractionGraph) -> Vec<&'a str> {
        self.order.iter().map(|&n| graph.nodes[n].id.as_str()).collect()
    }
}
