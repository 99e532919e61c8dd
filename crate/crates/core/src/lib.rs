//! Bayesian decision-theoretic Q-learning for two-stage sequential multiple
//! assignment randomised trials (SMARTs) with binary endpoints.
//!
//! Stage one randomises prophylaxis against placebo; participants who become
//! infected are randomised again between treatment and placebo at stage two.
//! At each interim analysis the library
//!
//! 1. accumulates per-cell event counts ([`inference::accumulate`]),
//! 2. computes posterior event probabilities with a conjugate or MCMC engine
//!    ([`inference`]),
//! 3. turns them into posterior expected utilities by backward induction
//!    ([`policy`]), and
//! 4. re-randomises in proportion to `Q^c` ([`allocation`]).
//!
//! [`simulator`] runs whole trials from a data-generating [`domain::Scenario`],
//! and [`sweep`] compares designs over scenario grids. The `smartq` binary
//! wraps both behind `simulate`, `sweep` and `report` commands ([`cli`]).
//!
//! ```
//! use smartq::design::DesignConfig;
//! use smartq::domain::Scenario;
//! use smartq::simulator::run_trial;
//!
//! let scenario = Scenario::new(0.5, 0.45, 0.05, 0.95).unwrap();
//! let design = DesignConfig::new(0, 1.0).unwrap().with_seed(7);
//! let result = run_trial(&scenario, &design).unwrap();
//! assert!(result.mean_utility > 0.0 && result.mean_utility <= 1.0);
//! ```

pub mod allocation;
pub mod cli;
pub mod design;
pub mod domain;
pub mod error;
pub mod inference;
pub mod policy;
pub mod rng;
pub mod simulator;
pub mod sweep;

pub use error::{Error, Result};
