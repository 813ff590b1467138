//! Tabular value estimation on terminating Markov reward processes.
//!
//! The crate pairs two estimators, first-visit Monte Carlo and TD as the
//! fixed point of the empirical Bellman equation, with the exact asymptotic
//! theory that predicts their errors:
//!
//! * [`mrp`]: specs, generators, sampling and the JSON file format;
//! * [`analysis`]: values, occupancy, CLT variances and the pooling
//!   coefficient, all closed form;
//! * [`estimators`]: the two estimators on a dataset;
//! * [`coupling`]: the trajectory crossing time via optimal transport;
//! * [`harness`]: replicated experiments written as CSV tables.

pub mod analysis;
pub mod coupling;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod mrp;

pub use analysis::{analyze, AnalysisReport, Weighting};
pub use error::{Error, Result};
pub use estimators::{advantage, mc_estimate, td_estimate, weighted_estimate, Method, TabularEstimate};
pub use mrp::{Dataset, MrpSpec, RewardDist, Successor, Trajectory, TERMINAL};
