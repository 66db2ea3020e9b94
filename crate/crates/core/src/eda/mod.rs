//! Estimation-of-distribution algorithm whose probabilistic model has the
//! transformed interaction graph as its fixed structure.
//!
//! A run draws an initial population, learns the model parameters from it,
//! and then repeats sample, replace, learn until the iteration budget runs out
//! or the population stops changing.

pub mod model;
pub mod population;
pub mod sampling;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use model::{build_initial_model, learn_parameters, ConditionalTable, ProbabilisticModel};
pub use population::{initialize_population, replace, Population};
pub use sampling::{sample_maxprob, sample_pls, MAXPROB_NODE_LIMIT};

use crate::error::{Error, Result};
use crate::graph::{AncestralOrdering, InteractionGraph};
use crate::metrics::{nondominated_filter, Front};
use crate::problem::NrpInstance;

/// Instances with at least this many requirements get `5n` iterations by default.
pub const LARGE_INSTANCE: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Random,
    Pls,
    Maxprob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Pls,
    Maxprob,
}

impl std::str::FromStr for InitMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(InitMethod::Random),
            "pls" => Ok(InitMethod::Pls),
            "maxprob" => Ok(InitMethod::Maxprob),
            _ => Err(Error::Config(format!("unknown init method `{s}`"))),
        }
    }
}

impl std::fmt::Display for InitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitMethod::Random => "random",
            InitMethod::Pls => "pls",
            InitMethod::Maxprob => "maxprob",
        })
    }
}

impl std::str::FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pls" => Ok(Sampler::Pls),
            "maxprob" => Ok(Sampler::Maxprob),
            _ => Err(Error::Config(format!("unknown sampler `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdaConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    pub stall_iterations: usize,
    pub init: InitMethod,
    pub sampler: Sampler,
    pub m_equivalent_size: f64,
    pub prior_p: f64,
    pub sample_size: usize,
    pub seed: u64,
    pub maxprob_node_limit: usize,
}

impl EdaConfig {
    /// Defaults for an instance with `n` requirements.
    pub fn for_size(n: usize) -> Self {
        let population_size = (5 * n).max(1);
        let max_iterations = if n >= LARGE_INSTANCE { 5 * n } else { 100 };
        EdaConfig {
            population_size,
            max_iterations,
            stall_iterations: (max_iterations / 10).max(1),
            init: InitMethod::Pls,
            sampler: Sampler::Pls,
            m_equivalent_size: 1.0,
            prior_p: 0.5,
            sample_size: population_size,
            seed: 0,
            maxprob_node_limit: MAXPROB_NODE_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.population_size == 0 {
            return fail("population_size must be positive".into());
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be positive".into());
        }
        if self.stall_iterations == 0 || self.stall_iterations > self.max_iterations {
            return fail(format!(
                "stall_iterations must be in 1..={}, got {}",
                self.max_iterations, self.stall_iterations
            ));
        }
        if self.sample_size == 0 || self.sample_size > self.population_size {
            return fail(format!(
                "sample_size must be in 1..={}, got {}",
                self.population_size, self.sample_size
            ));
        }
        if !(self.m_equivalent_size >= 0.0 && self.m_equivalent_size.is_finite()) {
            return fail(format!("m_equivalent_size must be non-negative, got {}", self.m_equivalent_size));
        }
        if !(0.0..=1.0).contains(&self.prior_p) {
            return fail(format!("prior_p must be in [0, 1], got {}", self.prior_p));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub iterations: usize,
    pub stalled: bool,
    pub front_size: usize,
    pub wall_ms: f64,
}

/// Runs the EDA once with `config.seed`.
pub fn run(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    ordering: &AncestralOrdering,
    config: &EdaConfig,
) -> Result<(Front, RunReport)> {
    run_observed(instance, graph, ordering, config, |_, _| {})
}

/// [`run`] calling `observe(iteration, population)` after every replacement.
pub fn run_observed<F>(
    instance: &NrpInstance,
    graph: &InteractionGraph,
    ordering: &AncestralOrdering,
    config: &EdaConfig,
    mut observe: F,
) -> Result<(Front, RunReport)>
where
    F: FnMut(usize, &Population),
{
    config.validate()?;
    ordering.check(graph)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let initial = build_initial_model(graph, ordering)?;
    let mut population = initialize_population(instance, &initial, config, &mut rng)?;
    let mut model = learn_parameters(&initial, &population, config);

    let mut iterations = 0;
    let mut unchanged = 0;
    while iterations < config.max_iterations {
        let sample = match config.sampler {
            Sampler::Pls => sample_pls(&model, instance, config.sample_size, &mut rng),
            Sampler::Maxprob => {
                sample_maxprob(&model, instance, config.sample_size, config.maxprob_node_limit)?
            }
        };
        let next = replace(&population, sample, instance);
        iterations += 1;
        if next.same_selections(&population) {
            unchanged += 1;
        } else {
            unchanged = 0;
        }
        population = next;
        observe(iterations, &population);
        model = learn_parameters(&model, &population, config);
        if unchanged >= config.stall_iterations {
            break;
        }
    }

    let front = nondominated_filter(instance.name.clone(), population.individuals().iter().cloned());
    let report = RunReport {
        seed: config.seed,
        iterations,
        stalled: unchanged >= config.stall_iterations,
        front_size: front.len(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((front, report))
}
