//! Independent oracles shared by the integration suites. Nothing here calls
//! the linear-algebra or simplex code under test.
#![allow(dead_code)]

use std::collections::HashMap;

use mrplab::coupling::{enumerate_trajectories, TrajectoryAtom};
use mrplab::mrp::{layered_name, MrpSpec, RewardDist, Successor, TERMINAL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact moments of a spec obtained by listing every trajectory.
pub struct Enumerated {
    pub values: Vec<f64>,
    pub occupancy: Vec<Vec<f64>>,
    pub visit_prob: Vec<f64>,
    pub return_var: Vec<f64>,
    /// Trajectories from the initial distribution.
    pub trajectories: usize,
}

fn edge_reward(spec: &MrpSpec, from: usize, to: Successor) -> RewardDist {
    spec.edge(from, to).expect("path follows an edge").reward
}

pub fn enumerate_moments(spec: &MrpSpec, cap: usize) -> Option<Enumerated> {
    let n = spec.num_states();
    let mut atoms: Vec<Vec<TrajectoryAtom>> = Vec::with_capacity(n);
    for s in 0..n {
        atoms.push(enumerate_trajectories(spec, s, cap).ok()?);
    }
    let trajectories: usize = spec.initial().iter().map(|&(s, _)| atoms[s].len()).sum();
    if trajectories > cap {
        return None;
    }
    let mut values = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut occupancy = vec![vec![0.0; n]; n];
    for s in 0..n {
        for a in &atoms[s] {
            let (mut mean, mut var) = (0.0, 0.0);
            for w in a.path.windows(2) {
                let x = w[0].state().unwrap();
                let r = edge_reward(spec, x, w[1]);
                mean += r.mean();
                var += r.variance();
                occupancy[s][x] += a.prob;
            }
            values[s] += a.prob * mean;
            second[s] += a.prob * (var + mean * mean);
        }
    }
    let return_var = (0..n).map(|s| second[s] - values[s] * values[s]).collect();
    let mut visit_prob = vec![0.0; n];
    for &(s0, d) in spec.initial() {
        for a in &atoms[s0] {
            let mut seen = vec![false; n];
            for x in a.path.iter().filter_map(|x| x.state()) {
                if !seen[x] {
                    seen[x] = true;
                    visit_prob[x] += d * a.prob;
                }
            }
        }
    }
    Some(Enumerated {
        values,
        occupancy,
        visit_prob,
        return_var,
        trajectories,
    })
}

/// Minimum cost over every integer transport plan, by exhaustive search
/// over the ways to split each row's supply, memoized on the remaining
/// demands. Integer marginals have an integer optimal plan, so this is the
/// optimum of the continuous problem as well.
pub fn integer_transport(supply: &[u64], demand: &[u64], cost: &[Vec<f64>]) -> f64 {
    fn split(
        i: usize,
        j: usize,
        left: u64,
        rem: &mut Vec<u64>,
        supply: &[u64],
        cost: &[Vec<f64>],
        memo: &mut HashMap<(usize, Vec<u64>), f64>,
    ) -> f64 {
        if j == rem.len() {
            return if left == 0 {
                rows(i + 1, rem, supply, cost, memo)
            } else {
                f64::INFINITY
            };
        }
        let mut best = f64::INFINITY;
        for x in 0..=left.min(rem[j]) {
            rem[j] -= x;
            let c = x as f64 * cost[i][j] + split(i, j + 1, left - x, rem, supply, cost, memo);
            rem[j] += x;
            best = best.min(c);
        }
        best
    }
    fn rows(
        i: usize,
        rem: &mut Vec<u64>,
        supply: &[u64],
        cost: &[Vec<f64>],
        memo: &mut HashMap<(usize, Vec<u64>), f64>,
    ) -> f64 {
        if i == supply.len() {
            return if rem.iter().all(|&r| r == 0) { 0.0 } else { f64::INFINITY };
        }
        if let Some(&c) = memo.get(&(i, rem.clone())) {
            return c;
        }
        let c = split(i, 0, supply[i], rem, supply, cost, memo);
        memo.insert((i, rem.clone()), c);
        c
    }
    rows(0, &mut demand.to_vec(), supply, cost, &mut HashMap::new())
}

/// Smallest power of two that turns every probability into an integer, if
/// one up to `2^max_bits` does.
pub fn dyadic_scale(probs: &[f64], max_bits: u32) -> Option<u64> {
    (0..=max_bits).map(|k| 1u64 << k).find(|&m| {
        probs.iter().all(|&p| {
            let x = p * m as f64;
            x == x.round()
        })
    })
}

/// Random acyclic spec whose transition probabilities are multiples of 1/4.
/// States sit in `layers` layers; edges go one or two layers ahead or to
/// the terminal state.
pub fn random_dyadic_dag(rng: &mut ChaCha8Rng, layers: usize, max_width: usize) -> MrpSpec {
    let widths: Vec<usize> = (0..layers).map(|_| rng.random_range(1..=max_width)).collect();
    let mut b = MrpSpec::builder();
    for (l, &w) in widths.iter().enumerate() {
        for i in 1..=w {
            b.push_state(layered_name(l + 1, i));
        }
    }
    let target = |rng: &mut ChaCha8Rng, l: usize| -> String {
        let next = l + rng.random_range(1..=2);
        if next >= layers {
            TERMINAL.to_string()
        } else {
            layered_name(next + 1, rng.random_range(1..=widths[next]))
        }
    };
    for (l, &w) in widths.iter().enumerate() {
        for i in 1..=w {
            let from = layered_name(l + 1, i);
            let reward = RewardDist::gaussian(rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5));
            let a = target(rng, l);
            let b2 = target(rng, l);
            let split = [0.5, 0.25, 0.75, 1.0][rng.random_range(0..4)];
            if split == 1.0 || a == b2 {
                b.push_edge(from, a, 1.0, reward);
            } else {
                b.push_edge(from.clone(), a, split, reward);
                b.push_edge(from, b2, 1.0 - split, reward);
            }
        }
    }
    for i in 1..=widths[0] {
        b.push_initial(layered_name(1, i), 1.0 / widths[0] as f64);
    }
    b.build().expect("generated spec is well formed")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Φ from its everywhere-convergent series
/// `1/2 + φ(x) sum_k x^(2k+1) / (1 3 5 ... (2k+1))`.
pub fn normal_cdf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    while term.abs() > 1e-300 && term.abs() > 1e-17 * sum.abs() {
        term *= x * x / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (0.5 + density * sum).clamp(0.0, 1.0)
}
