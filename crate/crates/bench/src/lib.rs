//! Fixtures shared by the benchmarks.

use mrplab::mrp::{gen_layered, sample_dataset};
use mrplab::{Dataset, MrpSpec};

/// The large layered instance used throughout the experiments.
pub fn layered(width: usize, horizon: usize, back_prob: f64) -> MrpSpec {
    gen_layered(width, horizon, back_prob, 7).expect("valid generator parameters")
}

pub fn dataset(spec: &MrpSpec, n: usize) -> Dataset {
    sample_dataset(spec, n, 11).expect("spec terminates")
}
