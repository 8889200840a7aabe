//! Backhaul-aware caching placement for wireless networks.
//!
//! * [`delay_model`]: problem instance, closed-form delays, exact and smoothed objectives.
//! * [`placement`]: cache tensors, replica counts and feasibility checks.
//! * [`solver`]: successive convex approximation with budget-multiplier subproblems.
//! * [`baselines`]: MPC, LCD and exhaustive search.
//! * [`simulator`]: Monte Carlo HARQ downloads, independent of the closed forms.

pub mod baselines;
pub mod delay_model;
pub mod error;
pub mod placement;
pub mod popularity;
pub mod simulator;
pub mod solver;

#[cfg(test)]
mod testutil;

pub use delay_model::{
    compute_beta, db_to_linear, DelayModel, ReplicaVector, Scenario, SmoothedObjectiveValue,
};
pub use error::{Error, Result};
pub use placement::{realize_placement, replica_counts, PlacementMatrix, Violation};
pub use popularity::zipf_popularity;
pub use simulator::{SimConfig, SimEstimate};
pub use solver::{sca_solve, Init, SolverConfig, SolverReport, StepRule};
