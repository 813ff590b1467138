//! Visits counted after two states have both been seen.
//!
//! Tracking which of `s`, `s'` has been visited turns the chain into four
//! copies (neither, only `s`, only `s'`, both). The first three are
//! absorbing systems obtained by dropping transitions into the states that
//! would change the copy; the "both" copy is the original chain restarted
//! from whichever of `s`, `s'` completed the pair.

use super::{absorbing_system, transition_matrix, AnalysisReport};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::mrp::MrpSpec;

#[derive(Clone, Debug)]
pub struct JointVisits {
    /// P(both states are visited).
    pub prob_both: f64,
    /// Expected visits to each state from the step at which the second of
    /// the pair is first reached (inclusive), zero if that never happens.
    pub visits_after_both: Vec<f64>,
}

/// Expected occupancy of the system `I - Q` with `dropped` columns removed,
/// started from `start`.
fn block_occupancy(q: &Matrix, dropped: &[usize], start: &[f64]) -> Result<Vec<f64>> {
    Ok(absorbing_system(q, dropped).transpose().lu()?.solve(start))
}

fn flow_into(eta: &[f64], q: &Matrix, target: usize) -> f64 {
    eta.iter().enumerate().map(|(x, e)| e * q[(x, target)]).sum()
}

pub fn joint_visits(
    spec: &MrpSpec,
    report: &AnalysisReport,
    s: usize,
    s_prime: usize,
) -> Result<JointVisits> {
    report.check_state(s)?;
    report.check_state(s_prime)?;
    let n = spec.num_states();
    if s == s_prime {
        let p = report.visit_prob[s];
        return Ok(JointVisits {
            prob_both: p,
            visits_after_both: report.occupancy.row(s).iter().map(|x| p * x).collect(),
        });
    }

    let q = transition_matrix(spec);
    let mut d = spec.initial_dense();
    let (d_s, d_sp) = (d[s], d[s_prime]);
    d[s] = 0.0;
    d[s_prime] = 0.0;

    let neither = block_occupancy(&q, &[s, s_prime], &d)?;
    let enter_s = d_s + flow_into(&neither, &q, s);
    let enter_sp = d_sp + flow_into(&neither, &q, s_prime);

    let mut start = vec![0.0; n];
    start[s] = enter_s;
    let only_s = block_occupancy(&q, &[s_prime], &start)?;
    start[s] = 0.0;
    start[s_prime] = enter_sp;
    let only_sp = block_occupancy(&q, &[s], &start)?;

    // mass completing the pair at s' (after s) and at s (after s')
    let done_at_sp = flow_into(&only_s, &q, s_prime);
    let done_at_s = flow_into(&only_sp, &q, s);

    let visits_after_both = report
        .occupancy
        .row(s_prime)
        .iter()
        .zip(report.occupancy.row(s))
        .map(|(a, b)| done_at_sp * a + done_at_s * b)
        .collect();

    Ok(JointVisits {
        prob_both: done_at_sp + done_at_s,
        visits_after_both,
    })
}
