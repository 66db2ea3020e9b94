//! Fixtures and independent oracles shared by unit tests.

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::{InteractionSet, NrpInstance, Requirement};

pub fn pairs(p: &[(&str, &str)]) -> Vec<(String, String)> {
    p.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

/// The five-requirement example with a combination, an exclusion and three
/// implications.
pub fn five_requirements() -> NrpInstance {
    five_requirements_with_limit(12.0)
}

pub fn five_requirements_with_limit(limit: f64) -> NrpInstance {
    NrpInstance::new(
        "five",
        vec![],
        vec![
            Requirement::with_satisfaction("r01", 3.0, 4.0),
            Requirement::with_satisfaction("r02", 2.0, 3.0),
            Requirement::with_satisfaction("r03", 4.0, 5.0),
            Requirement::with_satisfaction("r04", 1.0, 2.0),
            Requirement::with_satisfaction("r05", 2.0, 2.0),
        ],
        InteractionSet {
            implications: pairs(&[("r01", "r03"), ("r01", "r04"), ("r04", "r02")]),
            combinations: pairs(&[("r01", "r05")]),
            exclusions: pairs(&[("r03", "r02")]),
        },
        limit,
    )
    .unwrap()
}

pub fn ids_of_set(instance: &NrpInstance, ids: &[&str]) -> FixedBitSet {
    let mut bits = instance.empty_selection();
    for id in ids {
        bits.insert(instance.index_of(id).unwrap());
    }
    bits
}

/// Checks the raw implication/combination/exclusion pairs directly.
pub fn raw_valid(instance: &NrpInstance, bits: &FixedBitSet) -> bool {
    let has = |id: &str| bits.contains(instance.index_of(id).unwrap());
    let i = &instance.interactions;
    i.implications.iter().all(|(a, b)| !has(b) || has(a))
        && i.combinations.iter().all(|(a, b)| has(a) == has(b))
        && i.exclusions.iter().all(|(a, b)| !(has(a) && has(b)))
}

/// Random instance with roughly `density * n` interaction pairs. Implications
/// always point from a lower to a higher index; merging may still close a
/// cycle, so callers should skip instances that fail to build.
pub fn random_instance(n: usize, density: f64, seed: u64) -> NrpInstance {
    random_instance_with_ratio(n, density, 0.5, seed)
}

pub fn random_instance_with_ratio(n: usize, density: f64, ratio: f64, seed: u64) -> NrpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reqs: Vec<Requirement> = (0..n)
        .map(|j| {
            Requirement::with_satisfaction(
                format!("r{j:02}"),
                rng.gen_range(1..=10) as f64,
                rng.gen_range(1..=25) as f64,
            )
        })
        .collect();
    let total: f64 = reqs.iter().map(|r| r.effort).sum();
    let mut set = InteractionSet::default();
    let mut used = std::collections::HashSet::new();
    let target = (density * n as f64).round() as usize;
    let mut attempts = 0;
    while set.len() < target && attempts < 1000 && n >= 2 {
        attempts += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b || !used.insert((a.min(b), a.max(b))) {
            continue;
        }
        let (lo, hi) = (format!("r{:02}", a.min(b)), format!("r{:02}", a.max(b)));
        match rng.gen_range(0..10) {
            0..=5 => set.implications.push((lo, hi)),
            6..=7 => set.combinations.push((lo, hi)),
            _ => set.exclusions.push((lo, hi)),
        }
    }
    NrpInstance::new(format!("rnd{seed}"), vec![], reqs, set, (ratio * total).floor()).unwrap()
}
