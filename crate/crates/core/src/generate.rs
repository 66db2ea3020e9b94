//! Seeded synthetic instances shaped like common NRP benchmark sets.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{InteractionGraph, TieBreak};
use crate::instance_file::{ClientEntry, InstanceFile, InteractionsEntry, RequirementEntry, DEFAULT_EFFORT_RATIOS};

/// Attempts before giving up on an interaction set that yields a valid graph.
pub const GENERATOR_RETRIES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueScale {
    /// Efforts 1..=10, client weights and scores 1..=5.
    Nrp20,
    /// Efforts 1..=20, client weights 1..=5, scores in {1, 2, 3}.
    Nrp100,
}

impl std::str::FromStr for ValueScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nrp20" => Ok(ValueScale::Nrp20),
            "nrp100" => Ok(ValueScale::Nrp100),
            _ => Err(Error::Config(format!("unknown value scale `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub requirements: usize,
    pub clients: usize,
    /// Interaction pairs per requirement, in [0, 1].
    pub density: f64,
    pub scale: ValueScale,
    pub seed: u64,
    pub effort_ratios: Vec<f64>,
}

impl GeneratorConfig {
    pub fn new(requirements: usize, density: f64, seed: u64) -> Self {
        GeneratorConfig {
            requirements,
            clients: 5,
            density,
            scale: ValueScale::Nrp20,
            seed,
            effort_ratios: DEFAULT_EFFORT_RATIOS.to_vec(),
        }
    }
}

fn width(n: usize) -> usize {
    n.to_string().len().max(2)
}

/// Builds a random instance document with `round(density * n)` interaction
/// pairs. Implications follow a hidden random order so they never form a
/// cycle; about two thirds of the pairs are implications and the rest are
/// split between combinations and exclusions. Interaction sets that fail to
/// transform (a cycle through a merged node, an exclusion inside a
/// combination) are redrawn.
pub fn generate_instance(config: &GeneratorConfig) -> Result<InstanceFile> {
    let n = config.requirements;
    if n == 0 {
        return Err(Error::Config("at least one requirement is needed".into()));
    }
    if !(0.0..=1.0).contains(&config.density) {
        return Err(Error::Config(format!("density must be in [0, 1], got {}", config.density)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (max_effort, scores): (u32, &[u32]) = match config.scale {
        ValueScale::Nrp20 => (10, &[1, 2, 3, 4, 5]),
        ValueScale::Nrp100 => (20, &[1, 2, 3]),
    };

    let cw = width(config.clients);
    let clients: Vec<ClientEntry> = (1..=config.clients)
        .map(|c| ClientEntry {
            id: format!("c{c:0cw$}"),
            weight: rng.gen_range(1..=5) as f64,
        })
        .collect();
    let rw = width(n);
    let ids: Vec<String> = (1..=n).map(|j| format!("r{j:0rw$}")).collect();
    let requirements: Vec<RequirementEntry> = ids
        .iter()
        .map(|id| {
            let effort = rng.gen_range(1..=max_effort) as f64;
            if clients.is_empty() {
                RequirementEntry {
                    id: id.clone(),
                    effort,
                    values: None,
                    satisfaction: Some(*scores.choose(&mut rng).unwrap() as f64),
                }
            } else {
                let values: BTreeMap<String, f64> = clients
                    .iter()
                    .map(|c| (c.id.clone(), *scores.choose(&mut rng).unwrap() as f64))
                    .collect();
                RequirementEntry {
                    id: id.clone(),
                    effort,
                    values: Some(values),
                    satisfaction: None,
                }
            }
        })
        .collect();

    // tiny instances cannot hold round(density * n) distinct pairs
    let target = ((config.density * n as f64).round() as usize).min(n * (n - 1) / 2);
    for _ in 0..GENERATOR_RETRIES {
        let interactions = draw_interactions(&ids, target, &mut rng);
        let file = InstanceFile {
            name: format!("gen-n{n}-d{}-s{}", config.density, config.seed),
            clients: clients.clone(),
            requirements: requirements.clone(),
            interactions,
            effort_ratios: config.effort_ratios.clone(),
        };
        let instance = file.instance(1.0)?;
        let ok = InteractionGraph::build(&instance)
            .and_then(|g| g.ancestral_ordering(TieBreak::LowestId))
            .is_ok();
        if ok {
            return Ok(file);
        }
    }
    Err(Error::Contradiction(format!(
        "no consistent interaction set after {GENERATOR_RETRIES} attempts at density {}",
        config.density
    )))
}

fn draw_interactions(ids: &[String], target: usize, rng: &mut ChaCha8Rng) -> InteractionsEntry {
    let n = ids.len();
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);
    let mut used = HashSet::new();
    let mut out = InteractionsEntry::default();
    while used.len() < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b || !used.insert((a.min(b), a.max(b))) {
            continue;
        }
        let (first, second) = if rank[a] < rank[b] { (a, b) } else { (b, a) };
        let pair = (ids[first].clone(), ids[second].clone());
        match rng.gen_range(0..20) {
            0..=12 => out.implications.push(pair),
            13..=16 => out.combinations.push(pair),
            _ => out.exclusions.push(pair),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nrp20_ranges() {
        let file = generate_instance(&GeneratorConfig::new(20, 0.3, 1)).unwrap();
        assert_eq!(file.requirements.len(), 20);
        assert_eq!(file.clients.len(), 5);
        for r in &file.requirements {
            assert!((1.0..=10.0).contains(&r.effort));
            for v in r.values.as_ref().unwrap().values() {
                assert!((1.0..=5.0).contains(v));
            }
        }
        assert_eq!(file.interactions.implications.len() + file.interactions.combinations.len() + file.interactions.exclusions.len(), 6);
    }

    #[test]
    fn nrp100_ranges() {
        let cfg = GeneratorConfig { scale: ValueScale::Nrp100, ..GeneratorConfig::new(100, 0.4, 2) };
        let file = generate_instance(&cfg).unwrap();
        assert_eq!(file.requirements[0].id, "r001");
        for r in &file.requirements {
            assert!((1.0..=20.0).contains(&r.effort));
            assert!(r.values.as_ref().unwrap().values().all(|v| [1.0, 2.0, 3.0].contains(v)));
        }
    }

    #[test]
    fn no_interactions_keeps_input_order() {
        let file = generate_instance(&GeneratorConfig::new(12, 0.0, 3)).unwrap();
        let inst = file.instance(0.5).unwrap();
        assert!(inst.interactions.is_empty());
        let g = InteractionGraph::build(&inst).unwrap();
        let ord = g.ancestral_ordering(TieBreak::LowestId).unwrap();
        let ids: Vec<&str> = ord.ids(&g);
        let want: Vec<&str> = file.requirements.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, want);
    }

    #[test]
    fn seeded() {
        let a = generate_instance(&GeneratorConfig::new(15, 0.5, 9)).unwrap();
        let b = generate_instance(&GeneratorConfig::new(15, 0.5, 9)).unwrap();
        let c = generate_instance(&GeneratorConfig::new(15, 0.5, 10)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.requirements, c.requirements);
    }

    #[test]
    fn generated_documents_round_trip() {
        for seed in 0..20 {
            let file = generate_instance(&GeneratorConfig::new(14, 0.6, seed)).unwrap();
            let again = InstanceFile::from_json(&file.to_json()).unwrap();
            assert_eq!(again, file);
            assert_eq!(again.instance(0.3).unwrap(), file.instance(0.3).unwrap());
        }
    }

    #[test]
    fn bad_density() {
        assert_eq!(generate_instance(&GeneratorConfig::new(5, 1.5, 0)).unwrap_err().category(), "config");
    }
}
