//! Trajectory crossing time.
//!
//! Two trajectories cross once one of them reaches a state the other has
//! already visited. H(s, s') is the expected crossing time under the best
//! coupling of the trajectory laws from `s` and `s'`. On acyclic specs both
//! laws have finite support, so the minimum over couplings is a
//! transportation problem over enumerated trajectories.

mod crossing;
mod enumerate;
mod transport;

pub use crossing::{
    check_disjoint, crossing_cost, crossing_coupling, crossing_problem, crossing_time_exact,
    crossing_time_upper, joint_visit_probability, CrossingCoupling,
};
pub use enumerate::{enumerate_trajectories, TrajectoryAtom, DEFAULT_ATOM_CAP};
pub use transport::{solve_transportation, CouplingResult, TransportProblem, MARGINAL_TOL, MAX_CELLS};
