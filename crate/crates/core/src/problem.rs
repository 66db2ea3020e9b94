//! Domain model of the bi-objective Next Release Problem.
//!
//! An [`NrpInstance`] is a set of candidate requirements, each with a
//! development effort and a satisfaction value aggregated from weighted
//! client scores, together with the functional interactions between them and
//! an effort limit. A [`Solution`] is a subset of requirements with its cached
//! objective values: satisfaction is maximised, effort is minimised.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Client {
    pub id: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub effort: f64,
    /// Per-client scores. `None` means the satisfaction was supplied directly.
    pub client_values: Option<BTreeMap<String, f64>>,
    pub satisfaction: f64,
}

impl Requirement {
    pub fn with_satisfaction(id: impl Into<String>, effort: f64, satisfaction: f64) -> Self {
        Requirement {
            id: id.into(),
            effort,
            client_values: None,
            satisfaction,
        }
    }

    /// Satisfaction stays at 0 until [`aggregate_satisfaction`] runs.
    pub fn with_client_values<I, K>(id: impl Into<String>, effort: f64, values: I) -> Self
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<String>,
    {
        Requirement {
            id: id.into(),
            effort,
            client_values: Some(values.into_iter().map(|(k, v)| (k.into(), v)).collect()),
            satisfaction: 0.0,
        }
    }
}

/// Functional interactions: implications are ordered (`a` before `b`),
/// combinations and exclusions are unordered.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionSet {
    #[serde(default)]
    pub implications: Vec<(String, String)>,
    #[serde(default)]
    pub combinations: Vec<(String, String)>,
    #[serde(default)]
    pub exclusions: Vec<(String, String)>,
}

impl InteractionSet {
    pub fn is_empty(&self) -> bool {
        self.implications.is_empty() && self.combinations.is_empty() && self.exclusions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.implications.len() + self.combinations.len() + self.exclusions.len()
    }

    /// Every pair as `(kind, a, b)`, in declaration order.
    pub fn pairs(&self) -> impl Iterator<Item = (&'static str, &str, &str)> {
        self.implications
            .iter()
            .map(|(a, b)| ("implication", a.as_str(), b.as_str()))
            .chain(
                self.combinations
                    .iter()
                    .map(|(a, b)| ("combination", a.as_str(), b.as_str())),
            )
            .chain(
                self.exclusions
                    .iter()
                    .map(|(a, b)| ("exclusion", a.as_str(), b.as_str())),
            )
    }

    fn validate(&self, known: &HashMap<String, usize>) -> Result<()> {
        let mut seen: HashMap<(usize, usize), &'static str> = HashMap::new();
        for (kind, a, b) in self.pairs() {
            let ia = *known
                .get(a)
                .ok_or_else(|| Error::UnknownRequirement(a.to_string()))?;
            let ib = *known
                .get(b)
                .ok_or_else(|| Error::UnknownRequirement(b.to_string()))?;
            if ia == ib {
                return Err(Error::Validation(format!("{kind} pair ({a}, {b}) is a self-pair")));
            }
            let key = (ia.min(ib), ia.max(ib));
            if let Some(prev) = seen.insert(key, kind) {
                return Err(if prev == kind {
                    Error::Validation(format!("duplicate {kind} pair ({a}, {b})"))
                } else {
                    Error::Validation(format!(
                        "pair ({a}, {b}) declared both as {prev} and as {kind}"
                    ))
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NrpInstance {
    pub name: String,
    pub clients: Vec<Client>,
    pub requirements: Vec<Requirement>,
    pub interactions: InteractionSet,
    pub effort_limit: f64,
    index: HashMap<String, usize>,
}

impl NrpInstance {
    /// Validates the instance and aggregates client scores into satisfactions.
    pub fn new(
        name: impl Into<String>,
        clients: Vec<Client>,
        requirements: Vec<Requirement>,
        interactions: InteractionSet,
        effort_limit: f64,
    ) -> Result<Self> {
        let mut instance = NrpInstance {
            name: name.into(),
            clients,
            requirements,
            interactions,
            effort_limit,
            index: HashMap::new(),
        };
        instance.validate()?;
        aggregate_satisfaction(instance)
    }

    fn validate(&mut self) -> Result<()> {
        if !(self.effort_limit.is_finite() && self.effort_limit >= 0.0) {
            return Err(Error::Validation(format!(
                "effort limit must be a non-negative finite number, got {}",
                self.effort_limit
            )));
        }
        let mut client_ids = HashSet::new();
        for c in &self.clients {
            if !client_ids.insert(c.id.as_str()) {
                return Err(Error::Validation(format!("duplicate client id `{}`", c.id)));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::Validation(format!(
                    "client `{}` has invalid weight {}",
                    c.id, c.weight
                )));
            }
        }
        self.index.clear();
        for (i, r) in self.requirements.iter().enumerate() {
            if self.index.insert(r.id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate requirement id `{}`", r.id)));
            }
            if !(r.effort.is_finite() && r.effort > 0.0) {
                return Err(Error::Validation(format!(
                    "requirement `{}` must have positive effort, got {}",
                    r.id, r.effort
                )));
            }
            if !(r.satisfaction.is_finite() && r.satisfaction >= 0.0) {
                return Err(Error::Validation(format!(
                    "requirement `{}` has invalid satisfaction {}",
                    r.id, r.satisfaction
                )));
            }
            if let Some(values) = &r.client_values {
                for (client, v) in values {
                    if !client_ids.contains(client.as_str()) {
                        return Err(Error::UnknownClient {
                            requirement: r.id.clone(),
                            client: client.clone(),
                        });
                    }
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(Error::Validation(format!(
                            "requirement `{}` has invalid value {v} for client `{client}`",
                            r.id
                        )));
                    }
                }
            }
        }
        self.interactions.validate(&self.index)
    }

    pub fn len(&self) -> usize {
        self.requirements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn total_effort(&self) -> f64 {
        self.requirements.iter().map(|r| r.effort).sum()
    }

    /// Same requirements and interactions under a different effort limit.
    pub fn with_effort_limit(&self, effort_limit: f64) -> Result<Self> {
        let mut other = self.clone();
        other.effort_limit = effort_limit;
        other.validate()?;
        Ok(other)
    }

    /// Requirement ids of a selection, in instance order.
    pub fn ids_of<'a>(&'a self, selection: &'a FixedBitSet) -> impl Iterator<Item = &'a str> + 'a {
        selection.ones().map(move |i| self.requirements[i].id.as_str())
    }

    pub fn empty_selection(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.len())
    }
}

/// Sets every requirement's satisfaction to the client-weighted sum of its
/// scores. Requirements without per-client scores keep their direct value and
/// clients that did not score a requirement contribute 0.
pub fn aggregate_satisfaction(mut instance: NrpInstance) -> Result<NrpInstance> {
    let weights: HashMap<&str, f64> = instance
        .clients
        .iter()
        .map(|c| (c.id.as_str(), c.weight))
        .collect();
    let mut sats = Vec::with_capacity(instance.requirements.len());
    for r in &instance.requirements {
        let sat = match &r.client_values {
            None => r.satisfaction,
            Some(values) => {
                let mut total = 0.0;
                for (client, v) in values {
                    let w = weights.get(client.as_str()).ok_or_else(|| Error::UnknownClient {
                        requirement: r.id.clone(),
                        client: client.clone(),
                    })?;
                    total += w * v;
                }
                total
            }
        };
        sats.push(sat);
    }
    for (r, s) in instance.requirements.iter_mut().zip(sats) {
        r.satisfaction = s;
    }
    Ok(instance)
}

/// A subset of requirements with cached satisfaction and effort.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    selected: FixedBitSet,
    satisfaction: f64,
    effort: f64,
}

impl Solution {
    pub fn from_selection(instance: &NrpInstance, selected: FixedBitSet) -> Self {
        debug_assert_eq!(selected.len(), instance.len());
        let (mut satisfaction, mut effort) = (0.0, 0.0);
        for i in selected.ones() {
            let r = &instance.requirements[i];
            satisfaction += r.satisfaction;
            effort += r.effort;
        }
        Solution {
            selected,
            satisfaction,
            effort,
        }
    }

    pub fn empty(instance: &NrpInstance) -> Self {
        Solution::from_selection(instance, instance.empty_selection())
    }

    pub fn selected(&self) -> &FixedBitSet {
        &self.selected
    }

    pub fn satisfaction(&self) -> f64 {
        self.satisfaction
    }

    pub fn effort(&self) -> f64 {
        self.effort
    }

    pub fn len(&self) -> usize {
        self.selected.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_clear()
    }

    pub fn contains(&self, requirement: usize) -> bool {
        self.selected.contains(requirement)
    }

    /// Objective point `(satisfaction, effort)`.
    pub fn point(&self) -> (f64, f64) {
        (self.satisfaction, self.effort)
    }

    /// Selected requirement indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.selected.ones().collect()
    }

    /// Semicolon-joined selected ids in ascending id order.
    pub fn id_list(&self, instance: &NrpInstance) -> String {
        let mut ids: Vec<&str> = instance.ids_of(&self.selected).collect();
        ids.sort_unstable();
        ids.join(";")
    }

    /// Orders by ascending effort, then descending satisfaction, then selection.
    pub fn cmp_by_effort(&self, other: &Self) -> std::cmp::Ordering {
        self.effort
            .total_cmp(&other.effort)
            .then_with(|| other.satisfaction.total_cmp(&self.satisfaction))
            .then_with(|| self.indices().cmp(&other.indices()))
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(sat {}, eff {}) {:?}",
            self.satisfaction,
            self.effort,
            self.indices()
        )
    }
}

/// Evaluates a set of requirement ids.
pub fn evaluate<I, S>(selected: I, instance: &NrpInstance) -> Result<Solution>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut bits = instance.empty_selection();
    for id in selected {
        let id = id.as_ref();
        let i = instance
            .index_of(id)
            .ok_or_else(|| Error::UnknownRequirement(id.to_string()))?;
        bits.insert(i);
    }
    Ok(Solution::from_selection(instance, bits))
}

/// `u` dominates `v` iff it needs no more effort and gives strictly more
/// satisfaction. No tolerance is applied.
pub fn dominates(u: &Solution, v: &Solution) -> bool {
    u.effort <= v.effort && u.satisfaction > v.satisfaction
}

/// Effort within the limit and every functional interaction respected.
pub fn is_feasible(solution: &Solution, instance: &NrpInstance, graph: &InteractionGraph) -> bool {
    solution.effort <= instance.effort_limit && graph.is_valid_selection(solution.selected())
}
