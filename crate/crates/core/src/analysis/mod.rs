//! Closed-form quantities of a terminating MRP.
//!
//! Everything is derived from one factorization of `I - Q`, where `Q` is the
//! transition block among non-terminal states. The inverse is the occupancy
//! (fundamental) matrix `N[s][s'] = E[N(s') | S_0 = s]`.

mod joint;
mod variance;
mod weighting;

use std::sync::Arc;

pub use joint::{joint_visits, JointVisits};
pub use variance::{
    mc_advantage_asymptotic_variance, mc_advantage_lower_bound, mc_asymptotic_variance,
    pooling_coefficient, return_variance, td_advantage_asymptotic_variance,
    td_advantage_upper_bound, td_asymptotic_variance, td_mc_ratio, PoolingCoefficient,
};
pub use weighting::{weighted_occupancy, weighted_value, Weighting};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mrp::{MrpSpec, Successor};

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    /// V(s).
    pub values: Vec<f64>,
    /// `occupancy[(s, t)]` is the expected number of visits to `t` from `s`.
    pub occupancy: Matrix,
    /// Expected visits under the initial distribution.
    pub occupancy_from_d: Vec<f64>,
    /// P(s is visited by a trajectory).
    pub visit_prob: Vec<f64>,
    /// Var(R + V(S') | S = s).
    pub one_step_var: Vec<f64>,
    /// E[T | S_0 = s], the expected number of non-terminal states visited.
    pub expected_horizon: Vec<f64>,
    names: Arc<[String]>,
}

impl AnalysisReport {
    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s < self.num_states() {
            Ok(())
        } else {
            Err(Error::UnknownState(format!("#{s}")))
        }
    }

    pub fn sigma2_min(&self) -> f64 {
        self.one_step_var.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sigma2_max(&self) -> f64 {
        self.one_step_var.iter().copied().fold(0.0, f64::max)
    }
}

/// Transition block among non-terminal states.
pub(crate) fn transition_matrix(spec: &MrpSpec) -> Matrix {
    let n = spec.num_states();
    let mut q = Matrix::zeros(n);
    for s in 0..n {
        for e in spec.edges(s) {
            if let Successor::State(t) = e.to {
                q[(s, t)] += e.prob;
            }
        }
    }
    q
}

/// `I - Q` with selected columns of `Q` dropped (transitions into those
/// states are treated as leaving the system).
pub(crate) fn absorbing_system(q: &Matrix, dropped: &[usize]) -> Matrix {
    let n = q.dim();
    let mut a = Matrix::identity(n);
    for s in 0..n {
        for t in 0..n {
            if !dropped.contains(&t) {
                a[(s, t)] -= q[(s, t)];
            }
        }
    }
    a
}

pub fn analyze(spec: &MrpSpec) -> Result<AnalysisReport> {
    let n = spec.num_states();
    let q = transition_matrix(spec);
    let lu = absorbing_system(&q, &[]).lu()?;

    let mean_reward: Vec<f64> = (0..n)
        .map(|s| spec.edges(s).iter().map(|e| e.prob * e.reward.mean()).sum())
        .collect();
    let values = lu.solve(&mean_reward);
    let occupancy = lu.inverse();

    let d = spec.initial_dense();
    let mut occupancy_from_d = vec![0.0; n];
    for (s, &ds) in d.iter().enumerate() {
        if ds != 0.0 {
            for (acc, x) in occupancy_from_d.iter_mut().zip(occupancy.row(s)) {
                *acc += ds * x;
            }
        }
    }

    // strong Markov: E[N(s)] = P(s in tau) * E[N(s) | S_0 = s]
    let visit_prob = (0..n)
        .map(|s| occupancy_from_d[s] / occupancy[(s, s)])
        .collect();

    let one_step_var = (0..n)
        .map(|s| {
            let target = |e: &crate::mrp::Edge| {
                e.reward.mean() + e.to.state().map_or(0.0, |t| values[t])
            };
            let m: f64 = spec.edges(s).iter().map(|e| e.prob * target(e)).sum();
            spec.edges(s)
                .iter()
                .map(|e| e.prob * (e.reward.variance() + (target(e) - m).powi(2)))
                .sum()
        })
        .collect();

    let expected_horizon = (0..n).map(|s| occupancy.row(s).iter().sum()).collect();

    Ok(AnalysisReport {
        values,
        occupancy,
        occupancy_from_d,
        visit_prob,
        one_step_var,
        expected_horizon,
        names: spec.names().clone(),
    })
}
