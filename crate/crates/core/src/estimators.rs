//! First-visit Monte Carlo and tabular TD (the fixed point of the empirical
//! Bellman equation) on a batch of trajectories.

use std::fmt;
use std::sync::Arc;

use crate::analysis::Weighting;
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::mrp::{Dataset, MrpSpec, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Mc,
    Td,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mc => "MC",
            Method::Td => "TD",
        })
    }
}

/// Per-state estimates. A state without data has no estimate. Counts are
/// trajectories containing the state for MC and total visits for TD.
#[derive(Clone, Debug)]
pub struct TabularEstimate {
    pub method: Method,
    values: Vec<Option<f64>>,
    counts: Vec<usize>,
    names: Arc<[String]>,
}

impl TabularEstimate {
    pub fn value(&self, s: usize) -> Result<f64> {
        match self.values.get(s) {
            Some(Some(v)) => Ok(*v),
            Some(None) => Err(Error::Undefined(self.names[s].clone())),
            None => Err(Error::UnknownState(format!("#{s}"))),
        }
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn count(&self, s: usize) -> usize {
        self.counts[s]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }
}

/// `est(s) - est(s')`.
pub fn advantage(est: &TabularEstimate, s: usize, s_prime: usize) -> Result<f64> {
    Ok(est.value(s)? - est.value(s_prime)?)
}

pub fn weighted_estimate(est: &TabularEstimate, w: &Weighting) -> Result<f64> {
    w.entries()
        .iter()
        .map(|&(s, x)| Ok(x * est.value(s)?))
        .sum()
}

pub fn mc_estimate(data: &Dataset, spec: &MrpSpec) -> TabularEstimate {
    mc_from_trajectories(&data.trajectories, spec)
}

pub fn td_estimate(data: &Dataset, spec: &MrpSpec) -> Result<TabularEstimate> {
    td_from_trajectories(&data.trajectories, spec)
}

/// Mean return after the first visit, over trajectories that visit.
pub fn mc_from_trajectories(trajectories: &[Trajectory], spec: &MrpSpec) -> TabularEstimate {
    let n = spec.num_states();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    let mut stamp = vec![usize::MAX; n];
    let mut tails = Vec::new();
    for (i, traj) in trajectories.iter().enumerate() {
        tails.clear();
        tails.resize(traj.len(), 0.0);
        let mut acc = 0.0;
        for t in (0..traj.len()).rev() {
            acc += traj.rewards[t];
            tails[t] = acc;
        }
        for (t, &s) in traj.states.iter().enumerate() {
            if stamp[s] != i {
                stamp[s] = i;
                sums[s] += tails[t];
                counts[s] += 1;
            }
        }
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&x, &c)| (c > 0).then(|| x / c as f64))
        .collect();
    TabularEstimate {
        method: Method::Mc,
        values,
        counts,
        names: spec.names().clone(),
    }
}

/// Empirical model built from every visit.
struct EmpiricalModel {
    visits: Vec<usize>,
    /// `(successor, count)` per state; terminal transitions are not stored.
    successors: Vec<Vec<(usize, usize)>>,
    reward_sum: Vec<f64>,
}

impl EmpiricalModel {
    fn new(trajectories: &[Trajectory], n: usize) -> Self {
        let mut visits = vec![0usize; n];
        let mut successors: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut reward_sum = vec![0.0; n];
        for traj in trajectories {
            for (t, &s) in traj.states.iter().enumerate() {
                visits[s] += 1;
                reward_sum[s] += traj.rewards[t];
                if let Some(&next) = traj.states.get(t + 1) {
                    match successors[s].iter_mut().find(|(x, _)| *x == next) {
                        Some((_, c)) => *c += 1,
                        None => successors[s].push((next, 1)),
                    }
                }
            }
        }
        Self {
            visits,
            successors,
            reward_sum,
        }
    }
}

/// Strongly connected components of the visited part of the empirical
/// graph, sinks first (Tarjan, iterative).
fn components(model: &EmpiricalModel) -> Vec<Vec<usize>> {
    let n = model.visits.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next_index = 0;
    for root in (0..n).filter(|&s| model.visits[s] > 0) {
        if index[root] != usize::MAX {
            continue;
        }
        // (node, position in its successor list)
        let mut work = vec![(root, 0usize)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if let Some(&(w, _)) = model.successors[v].get(*pos) {
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("component on stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Solves `(I - P_hat) V = r_hat` on visited states. Components are solved
/// in reverse topological order, each by dense LU, which is the same linear
/// system as one dense solve but avoids factoring the whole block at once.
pub fn td_from_trajectories(trajectories: &[Trajectory], spec: &MrpSpec) -> Result<TabularEstimate> {
    let n = spec.num_states();
    let model = EmpiricalModel::new(trajectories, n);
    let mut values: Vec<Option<f64>> = vec![None; n];
    let mut local = vec![usize::MAX; n];

    for comp in components(&model) {
        for (k, &s) in comp.iter().enumerate() {
            local[s] = k;
        }
        let m = comp.len();
        let mut a = Matrix::identity(m);
        let mut rhs = vec![0.0; m];
        for (k, &s) in comp.iter().enumerate() {
            let b = model.visits[s] as f64;
            rhs[k] = model.reward_sum[s] / b;
            for &(t, c) in &model.successors[s] {
                let p = c as f64 / b;
                match values[t] {
                    Some(v) => rhs[k] += p * v,
                    None => a[(k, local[t])] -= p,
                }
            }
        }
        let solved = if m == 1 {
            let pivot = a[(0, 0)];
            if pivot.abs() < crate::linalg::PIVOT_THRESHOLD {
                return Err(Error::Singular { column: 0, pivot });
            }
            vec![rhs[0] / pivot]
        } else {
            Lu::factor(a)?.solve(&rhs)
        };
        for (&s, v) in comp.iter().zip(solved) {
            values[s] = Some(v);
        }
    }

    Ok(TabularEstimate {
        method: Method::Td,
        values,
        counts: model.visits,
        names: spec.names().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::mrp::{gen_checkout, gen_layered, gen_meeting, sample_dataset, RewardDist, TERMINAL};

    fn traj(states: &[usize], rewards: &[f64]) -> Trajectory {
        Trajectory {
            states: states.to_vec(),
            rewards: rewards.to_vec(),
        }
    }

    fn funnel() -> MrpSpec {
        gen_meeting(2, 2, 3, RewardDist::gaussian(0.0, 1.0)).unwrap()
    }

    fn loop_spec() -> MrpSpec {
        MrpSpec::builder()
            .state("s")
            .edge("s", "s", 0.5, RewardDist::gaussian(0.0, 1.0))
            .edge("s", TERMINAL, 0.5, RewardDist::gaussian(0.0, 1.0))
            .initial("s", 1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn mc_is_a_mean_of_first_visit_returns() {
        let spec = loop_spec();
        let est = mc_from_trajectories(&[traj(&[0], &[1.0]), traj(&[0], &[3.0])], &spec);
        assert_eq!(est.value(0).unwrap(), 2.0);
        assert_eq!(est.count(0), 2);
        let first = mc_from_trajectories(&[traj(&[0, 0], &[1.0, 2.0])], &spec);
        assert_eq!(first.value(0).unwrap(), 3.0);
        assert_eq!(first.count(0), 1);
    }

    #[test]
    fn funnel_pooling_example() {
        let spec = funnel();
        let data = [traj(&[0, 2], &[0.0, 1.0]), traj(&[1, 2], &[0.0, 3.0])];
        let td = td_from_trajectories(&data, &spec).unwrap();
        let mc = mc_from_trajectories(&data, &spec);
        for s in 0..3 {
            assert!((td.value(s).unwrap() - 2.0).abs() < 1e-15);
        }
        assert_eq!(mc.value(0).unwrap(), 1.0);
        assert_eq!(mc.value(1).unwrap(), 3.0);
        assert_eq!(advantage(&td, 0, 1).unwrap(), 0.0);
        assert_eq!(advantage(&mc, 0, 1).unwrap(), -2.0);
        assert_eq!(advantage(&mc, 1, 1).unwrap(), 0.0);
        let w = Weighting::advantage(0, 1).unwrap();
        assert_eq!(weighted_estimate(&mc, &w).unwrap(), -2.0);
        assert_eq!(td.counts(), &[1, 1, 2]);
    }

    #[test]
    fn unvisited_states_are_undefined() {
        let spec = funnel();
        let data = [traj(&[0, 2], &[0.0, 1.0])];
        for est in [mc_from_trajectories(&data, &spec), td_from_trajectories(&data, &spec).unwrap()] {
            assert!(est.values()[1].is_none());
            assert_eq!(est.count(1), 0);
            assert!(matches!(est.value(1), Err(Error::Undefined(name)) if name == "h2_1"));
            assert!(matches!(advantage(&est, 0, 1), Err(Error::Undefined(_))));
        }
    }

    #[test]
    fn single_visit_data_reproduces_tail_returns() {
        let spec = gen_meeting(2, 4, 4, RewardDist::gaussian(0.0, 1.0)).unwrap();
        let data = [traj(&[0, 1, 2], &[1.0, 2.0, 4.0])];
        let td = td_from_trajectories(&data, &spec).unwrap();
        assert_eq!(td.value(0).unwrap(), 7.0);
        assert_eq!(td.value(1).unwrap(), 6.0);
        assert_eq!(td.value(2).unwrap(), 4.0);
    }

    #[test]
    fn td_equals_mc_on_disjoint_chains() {
        let spec = gen_meeting(3, 6, 6, RewardDist::uniform(0.3, 1.0)).unwrap();
        for seed in 0..20 {
            let data = sample_dataset(&spec, 40, seed).unwrap();
            let td = td_estimate(&data, &spec).unwrap();
            let mc = mc_estimate(&data, &spec);
            for s in 0..spec.num_states() {
                match (td.values()[s], mc.values()[s]) {
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs())),
                    (None, None) => {}
                    other => panic!("definedness differs at {s}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn td_residual_vanishes_on_cyclic_data() {
        let spec = gen_layered(3, 6, 0.5, 9).unwrap();
        let data = sample_dataset(&spec, 300, 4).unwrap();
        let td = td_estimate(&data, &spec).unwrap();
        let model = EmpiricalModel::new(&data.trajectories, spec.num_states());
        for s in 0..spec.num_states() {
            let Some(v) = td.values()[s] else { continue };
            let b = model.visits[s] as f64;
            let next: f64 = model.successors[s]
                .iter()
                .map(|&(t, c)| c as f64 / b * td.value(t).unwrap())
                .sum();
            assert!((v - (model.reward_sum[s] / b + next)).abs() < 1e-9);
        }
    }

    #[test]
    fn td_matches_a_dense_solve() {
        let spec = gen_layered(2, 5, 0.6, 3).unwrap();
        let data = sample_dataset(&spec, 200, 1).unwrap();
        let td = td_estimate(&data, &spec).unwrap();
        let model = EmpiricalModel::new(&data.trajectories, spec.num_states());
        let n = spec.num_states();
        let mut a = Matrix::identity(n);
        let mut r = vec![0.0; n];
        for s in 0..n {
            let b = model.visits[s] as f64;
            if b == 0.0 {
                continue;
            }
            r[s] = model.reward_sum[s] / b;
            for &(t, c) in &model.successors[s] {
                a[(s, t)] -= c as f64 / b;
            }
        }
        let dense = a.lu().unwrap().solve(&r);
        for s in 0..n {
            if let Some(v) = td.values()[s] {
                assert!((v - dense[s]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mc_on_checkout_is_close_to_truth() {
        let spec = gen_checkout(&[0.5, 0.1], 0.2).unwrap();
        let v = analyze(&spec).unwrap().values[0];
        let data = sample_dataset(&spec, 10_000, 12).unwrap();
        let mc = mc_estimate(&data, &spec);
        let n = mc.count(0) as f64;
        let se = (v * (1.0 - v) / n).sqrt();
        assert!((mc.value(0).unwrap() - v).abs() < 4.0 * se);
    }
}
