//! Asymptotic variances of the two estimators and the pooling coefficient
//! that relates them.
//!
//! All variances are normalized by the number of trajectories `n`: they are
//! the limits of `n * MSE`.

use super::joint::joint_visits;
use super::weighting::{weighted_occupancy, Weighting};
use super::AnalysisReport;
use crate::coupling::check_disjoint;
use crate::error::{Error, Result};
use crate::mrp::MrpSpec;

/// Var(G | S_0 = s) = sum_x N[s][x] sigma^2(x).
pub fn return_variance(report: &AnalysisReport, s: usize) -> f64 {
    report
        .occupancy
        .row(s)
        .iter()
        .zip(&report.one_step_var)
        .map(|(n, v)| n * v)
        .sum()
}

/// First-visit MC: `Var(G | S_0 = s) / P(s in tau)`.
pub fn mc_asymptotic_variance(report: &AnalysisReport, s: usize) -> f64 {
    return_variance(report, s) / report.visit_prob[s]
}

/// TD fixed point under weighting `w`: `sum_x eta_w(x)^2 sigma^2(x) / eta_d(x)`.
/// States the initial distribution never reaches contribute nothing.
pub fn td_asymptotic_variance(report: &AnalysisReport, w: &Weighting) -> Result<f64> {
    let eta = weighted_occupancy(report, w)?;
    Ok(eta
        .iter()
        .zip(&report.one_step_var)
        .zip(&report.occupancy_from_d)
        .filter(|(_, &d)| d > 0.0)
        .map(|((e, v), d)| e * e * v / d)
        .sum())
}

/// Asymptotic variance of `V_td(s) - V_td(s')`.
pub fn td_advantage_asymptotic_variance(
    report: &AnalysisReport,
    s: usize,
    s_prime: usize,
) -> Result<f64> {
    match Weighting::advantage(s, s_prime) {
        Ok(w) => td_asymptotic_variance(report, &w),
        Err(Error::EmptyWeighting) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Asymptotic variance of `V_mc(s) - V_mc(s')`.
///
/// The two first-visit averages are correlated through trajectories that
/// visit both states. Writing each centered return as a sum of temporal
/// differences, only the steps after both states have been reached
/// contribute to the cross moment, which gives
/// `Cov = sum_x sigma^2(x) E[visits to x after both] / (p_s p_s')`.
pub fn mc_advantage_asymptotic_variance(
    spec: &MrpSpec,
    report: &AnalysisReport,
    s: usize,
    s_prime: usize,
) -> Result<f64> {
    report.check_state(s)?;
    report.check_state(s_prime)?;
    if s == s_prime {
        return Ok(0.0);
    }
    let joint = joint_visits(spec, report, s, s_prime)?;
    let shared: f64 = joint
        .visits_after_both
        .iter()
        .zip(&report.one_step_var)
        .map(|(n, v)| n * v)
        .sum();
    let (p, p_prime) = (report.visit_prob[s], report.visit_prob[s_prime]);
    let var = mc_asymptotic_variance(report, s) + mc_asymptotic_variance(report, s_prime)
        - 2.0 * shared / (p * p_prime);
    Ok(var.max(0.0))
}

/// Decomposition of the TD/MC variance ratio at one state.
#[derive(Clone, Debug)]
pub struct PoolingCoefficient {
    /// `C(s)`, the ratio itself.
    pub value: f64,
    /// `C(s, x) = N[s][x] p_s / eta_d(x)`: the share of visits to `x` that
    /// come from trajectories that went through `s` first.
    pub pairwise: Vec<f64>,
    /// `mu_s(x)`, proportional to `N[s][x] sigma^2(x)`.
    pub weights: Vec<f64>,
    /// Every reachable one-step variance is zero; `value` is then 1 by
    /// convention.
    pub degenerate: bool,
}

pub fn pooling_coefficient(report: &AnalysisReport, s: usize) -> Result<PoolingCoefficient> {
    report.check_state(s)?;
    let n_s = report.occupancy.row(s);
    let p = report.visit_prob[s];
    let pairwise: Vec<f64> = n_s
        .iter()
        .zip(&report.occupancy_from_d)
        .map(|(n, &d)| if d > 0.0 { n * p / d } else { 0.0 })
        .collect();
    let raw: Vec<f64> = n_s.iter().zip(&report.one_step_var).map(|(n, v)| n * v).collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Ok(PoolingCoefficient {
            value: 1.0,
            pairwise,
            weights: vec![0.0; raw.len()],
            degenerate: true,
        });
    }
    let weights: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let value = weights.iter().zip(&pairwise).map(|(w, c)| w * c).sum();
    Ok(PoolingCoefficient {
        value,
        pairwise,
        weights,
        degenerate: false,
    })
}

/// TD over MC asymptotic variance at `s`; equals the pooling coefficient.
pub fn td_mc_ratio(report: &AnalysisReport, s: usize) -> Result<f64> {
    report.check_state(s)?;
    let mc = mc_asymptotic_variance(report, s);
    if mc <= 0.0 {
        return Err(Error::DegenerateRatio(report.name(s).to_string()));
    }
    Ok(td_asymptotic_variance(report, &Weighting::point(s))? / mc)
}

/// Lower bound on the MC advantage variance for two states that no
/// trajectory visits together:
/// `sigma2_min (E[T|s] / p_s + E[T|s'] / p_s')`.
pub fn mc_advantage_lower_bound(
    spec: &MrpSpec,
    report: &AnalysisReport,
    s: usize,
    s_prime: usize,
) -> Result<f64> {
    report.check_state(s)?;
    report.check_state(s_prime)?;
    if !check_disjoint(spec, s, s_prime)? {
        return Err(Error::NotDisjoint(
            report.name(s).to_string(),
            report.name(s_prime).to_string(),
        ));
    }
    let term = |x: usize| report.expected_horizon[x] / report.visit_prob[x];
    Ok(report.sigma2_min() * (term(s) + term(s_prime)))
}

/// Upper bound on the TD advantage variance given a bound `crossing_time`
/// on the coupled crossing time of the two states:
/// `2 sigma2_max H / min(p_s, p_s')`.
pub fn td_advantage_upper_bound(
    report: &AnalysisReport,
    s: usize,
    s_prime: usize,
    crossing_time: f64,
) -> Result<f64> {
    report.check_state(s)?;
    report.check_state(s_prime)?;
    let p = report.visit_prob[s].min(report.visit_prob[s_prime]);
    Ok(2.0 * report.sigma2_max() * crossing_time / p)
}
