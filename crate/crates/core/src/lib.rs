//! Solvers for the bi-objective Next Release Problem that build requirement
//! interactions into the search itself.
//!
//! The pieces, bottom-up:
//!
//! * [`problem`]: requirements, clients, interactions, solutions and dominance.
//! * [`graph`]: the interaction graph, its transformation into an
//!   implication-only DAG with indicator nodes, and ancestral orderings.
//! * [`exact`]: brute force, branch and bound, and split-and-combine fronts.
//! * [`eda`]: the estimation-of-distribution algorithm whose model structure
//!   is the interaction graph.
//! * [`metrics`]: non-dominated filtering, hypervolume, coincidence, run statistics.
//! * [`instance_file`], [`generate`], [`experiment`]: JSON instances,
//!   synthetic generation and the benchmark harness behind the `nrp` binary.

pub mod eda;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod generate;
pub mod graph;
pub mod instance_file;
pub mod metrics;
pub mod problem;

#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};
pub use graph::{AncestralOrdering, InteractionGraph, TieBreak};
pub use metrics::Front;
pub use problem::{dominates, evaluate, is_feasible, NrpInstance, Solution};
