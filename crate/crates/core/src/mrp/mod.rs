//! Terminating Markov reward processes: the model, validation, sampling,
//! benchmark generators and the JSON file format.

mod generators;
pub mod io;
mod sample;
mod spec;

pub use generators::{
    branch_name, gen_checkout, gen_layered, gen_meeting, layered_name, page_name, shared_name,
    BACKWARD_EDGE_MASS, LAYERED_WEIGHT_FLOOR,
};
pub use sample::{
    derive_seed, mix64, sample_dataset, sample_from, sample_trajectory, substream, Dataset,
    Trajectory, DEFAULT_STEP_CAP,
};
pub use spec::{
    Edge, MrpSpec, MrpSpecBuilder, RewardDist, Rule, Successor, ValidationReport, Violation,
    TERMINAL,
};
