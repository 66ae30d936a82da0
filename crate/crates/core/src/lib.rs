//! Distributed projection-free optimization for constrained aggregative
//! problems over time-varying networks.
//!
//! - [`graph`]: Metropolis mixing matrices and seeded time-varying schedules.
//! - [`problem`]: aggregative problems, feasible sets and the energy-pricing
//!   instance.
//! - [`oracles`]: linear minimization oracles and ℓ1 projections.
//! - [`dfwagt`]: the distributed Frank-Wolfe engine with dynamic tracking.
//! - [`baseline`]: projected-gradient baseline and the centralized oracle.
//! - [`harness`]: experiment configs, runs, audits and CSV output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod dfwagt;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracles;
pub mod problem;

pub use baseline::{centralized_solve, pga_run, OracleResult, PgaOptions};
pub use dfwagt::{fw_gap, run, RoundRecord, RunTrace, StepRule, StepSchedule, SwarmState};
pub use error::{Error, Result};
pub use harness::{Algorithm, ExperimentConfig};
pub use graph::{metropolis_weights, GraphSchedule, MixingMatrix, Selector, Topology};
pub use problem::{make_energy_problem, AggregativeProblem, AgentCost, EnergyParams, FeasibleSet, Profile};
