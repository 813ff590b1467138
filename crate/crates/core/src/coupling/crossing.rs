use std::collections::{HashSet, VecDeque};

use super::enumerate::{enumerate_trajectories, TrajectoryAtom};
use super::transport::{solve_transportation, CouplingResult, TransportProblem};
use crate::analysis::{analyze, joint_visits};
use crate::error::{Error, Result};
use crate::mrp::{sample_from, substream, MrpSpec, Successor, DEFAULT_STEP_CAP};

/// First `t >= 1` at which `{a_0..a_t}` meets `{b_1..b_t}`, with both paths
/// padded by the terminal state. The first path's start counts, the
/// second's does not.
pub fn crossing_cost(a: &[Successor], b: &[Successor]) -> usize {
    let at = |p: &[Successor], t: usize| p.get(t).copied().unwrap_or(Successor::Terminal);
    let mut seen_a: HashSet<Successor> = HashSet::from([at(a, 0)]);
    let mut seen_b: HashSet<Successor> = HashSet::new();
    let mut t = 1;
    loop {
        let (x, y) = (at(a, t), at(b, t));
        seen_a.insert(x);
        seen_b.insert(y);
        if seen_b.contains(&x) || seen_a.contains(&y) {
            return t;
        }
        t += 1;
    }
}

/// Optimal coupling of the trajectories from `s` and `s'` together with the
/// enumerated atoms (rows from `s`, columns from `s'`).
#[derive(Clone, Debug)]
pub struct CrossingCoupling {
    pub from_s: Vec<TrajectoryAtom>,
    pub from_s_prime: Vec<TrajectoryAtom>,
    pub result: CouplingResult,
}

impl CrossingCoupling {
    pub fn crossing_time(&self) -> f64 {
        self.result.optimal_cost
    }
}

pub fn crossing_problem(a: &[TrajectoryAtom], b: &[TrajectoryAtom]) -> Result<TransportProblem> {
    TransportProblem::new(
        a.iter().map(|x| x.prob).collect(),
        b.iter().map(|x| x.prob).collect(),
        a.iter()
            .map(|x| b.iter().map(|y| crossing_cost(&x.path, &y.path) as f64).collect())
            .collect(),
    )
}

pub fn crossing_coupling(spec: &MrpSpec, s: usize, s_prime: usize, cap: usize) -> Result<CrossingCoupling> {
    let from_s = enumerate_trajectories(spec, s, cap)?;
    let from_s_prime = enumerate_trajectories(spec, s_prime, cap)?;
    let result = solve_transportation(&crossing_problem(&from_s, &from_s_prime)?)?;
    Ok(CrossingCoupling {
        from_s,
        from_s_prime,
        result,
    })
}

/// H(s, s') on an acyclic spec.
pub fn crossing_time_exact(spec: &MrpSpec, s: usize, s_prime: usize, cap: usize) -> Result<f64> {
    Ok(crossing_coupling(spec, s, s_prime, cap)?.crossing_time())
}

/// Mean crossing cost of `n` independent trajectory pairs and its standard
/// error. Any coupling bounds H from above, so this is an upper estimate.
pub fn crossing_time_upper(
    spec: &MrpSpec,
    s: usize,
    s_prime: usize,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    for x in [s, s_prime] {
        if x >= spec.num_states() {
            return Err(Error::UnknownState(format!("#{x}")));
        }
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let costs = (0..n as u64)
        .map(|i| {
            let mut rng = substream(seed, i);
            let a = sample_from(spec, s, &mut rng, DEFAULT_STEP_CAP)?;
            let b = sample_from(spec, s_prime, &mut rng, DEFAULT_STEP_CAP)?;
            Ok(crossing_cost(&a.path(), &b.path()) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = costs.iter().sum::<f64>() / n as f64;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Whether no trajectory from the initial distribution visits both states.
///
/// Decided by reachability on the chain augmented with two "visited" bits,
/// which is exactly the event of positive mass in the both-visited copy.
pub fn check_disjoint(spec: &MrpSpec, s: usize, s_prime: usize) -> Result<bool> {
    let n = spec.num_states();
    for x in [s, s_prime] {
        if x >= n {
            return Err(Error::UnknownState(format!("#{x}")));
        }
    }
    let bits = |x: usize| u8::from(x == s) | (u8::from(x == s_prime) << 1);
    let mut seen = vec![[false; 4]; n];
    let mut queue = VecDeque::new();
    for &(x, p) in spec.initial() {
        if p > 0.0 && !seen[x][bits(x) as usize] {
            seen[x][bits(x) as usize] = true;
            queue.push_back((x, bits(x)));
        }
    }
    while let Some((x, b)) = queue.pop_front() {
        if b == 3 {
            return Ok(false);
        }
        for e in spec.edges(x).iter().filter(|e| e.prob > 0.0) {
            if let Successor::State(y) = e.to {
                let nb = b | bits(y);
                if !seen[y][nb as usize] {
                    seen[y][nb as usize] = true;
                    queue.push_back((y, nb));
                }
            }
        }
    }
    Ok(true)
}

/// P(a trajectory from the initial distribution visits both states).
pub fn joint_visit_probability(spec: &MrpSpec, s: usize, s_prime: usize) -> Result<f64> {
    let report = analyze(spec)?;
    Ok(joint_visits(spec, &report, s, s_prime)?.prob_both)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::coupling::DEFAULT_ATOM_CAP;
    use crate::mrp::{gen_checkout, gen_layered, gen_meeting, RewardDist, TERMINAL};

    fn path(xs: &[usize]) -> Vec<Successor> {
        xs.iter()
            .map(|&x| Successor::State(x))
            .chain([Successor::Terminal])
            .collect()
    }

    fn zero() -> RewardDist {
        RewardDist::constant(0.0)
    }

    /// Two heads, one of which skips the second state of a chain of `m`.
    fn skip_chain(m: usize) -> MrpSpec {
        let mut b = MrpSpec::builder().states(["s1a", "s1b"]);
        for k in 2..=m {
            b = b.state(format!("s{k}"));
        }
        b = b.edge("s1a", "s2", 1.0, zero()).edge("s1b", "s3", 1.0, zero());
        for k in 2..m {
            b = b.edge(format!("s{k}"), format!("s{}", k + 1), 1.0, zero());
        }
        b.edge(format!("s{m}"), TERMINAL, 1.0, zero())
            .initial("s1a", 0.5)
            .initial("s1b", 0.5)
            .build()
            .unwrap()
    }

    #[test]
    fn cost_examples() {
        // (a, m) vs (b, m)
        assert_eq!(crossing_cost(&path(&[0, 2]), &path(&[1, 2])), 1);
        // disjoint chains of length 4 meet at the terminal
        assert_eq!(crossing_cost(&path(&[0, 1, 2, 3]), &path(&[4, 5, 6, 7])), 4);
        // skip chain: (s1a, s2, s3, ..) vs (s1b, s3, ..)
        assert_eq!(crossing_cost(&path(&[0, 2, 3, 4]), &path(&[1, 3, 4])), 2);
        // unequal lengths pad with the terminal
        assert_eq!(crossing_cost(&path(&[0]), &path(&[1, 2, 3])), 3);
        assert_eq!(crossing_cost(&path(&[1, 2, 3]), &path(&[0])), 3);
    }

    #[test]
    fn definition_is_asymmetric() {
        // the second path revisits the first path's start
        let a = path(&[0, 1]);
        let b = path(&[2, 0]);
        assert_eq!(crossing_cost(&a, &b), 1);
        assert_eq!(crossing_cost(&b, &a), 2);
        // H(s, s) is not zero
        assert_eq!(crossing_cost(&a, &a), 1);
    }

    #[test]
    fn exact_crossing_times() {
        let funnel = gen_meeting(2, 2, 3, zero()).unwrap();
        assert_eq!(crossing_time_exact(&funnel, 0, 1, DEFAULT_ATOM_CAP).unwrap(), 1.0);
        for m in 3..=10 {
            let spec = skip_chain(m);
            assert_eq!(crossing_time_exact(&spec, 0, 1, DEFAULT_ATOM_CAP).unwrap(), 2.0);
        }
    }

    #[test]
    fn disjoint_chains_cross_at_termination() {
        for t in 3..=8 {
            let spec = gen_meeting(2, t, t, zero()).unwrap();
            let (s, sp) = (spec.index_of("h1_1").unwrap(), spec.index_of("h2_1").unwrap());
            let a = enumerate_trajectories(&spec, s, DEFAULT_ATOM_CAP).unwrap();
            let b = enumerate_trajectories(&spec, sp, DEFAULT_ATOM_CAP).unwrap();
            assert_eq!((a.len(), b.len()), (1, 1));
            let h = crossing_time_exact(&spec, s, sp, DEFAULT_ATOM_CAP).unwrap();
            assert_eq!(h, crossing_cost(&a[0].path, &b[0].path) as f64);
            // the terminal is the first shared state, at index t - 1 of both
            assert_eq!(h, (t - 1) as f64);
        }
    }

    #[test]
    fn optimal_coupling_need_not_respect_time() {
        // a -> x; b -> x or y; x -> p or q; y -> q
        let spec = MrpSpec::builder()
            .states(["a", "b", "x", "y", "p", "q"])
            .edge("a", "x", 1.0, zero())
            .edge("b", "x", 0.5, zero())
            .edge("b", "y", 0.5, zero())
            .edge("x", "p", 0.5, zero())
            .edge("x", "q", 0.5, zero())
            .edge("y", "q", 1.0, zero())
            .edge("p", TERMINAL, 1.0, zero())
            .edge("q", TERMINAL, 1.0, zero())
            .initial("a", 0.5)
            .initial("b", 0.5)
            .build()
            .unwrap();
        // (a,x,q) is paired with (b,y,q), which fixes a's second step before
        // b's first one is drawn; a coupling that decides step by step
        // only reaches 1/2 + 1/2 (1/2 * 2 + 1/2 * 3) = 1.75
        let h = crossing_time_exact(&spec, 0, 1, DEFAULT_ATOM_CAP).unwrap();
        assert!((h - 1.5).abs() < 1e-15, "{h}");
        let r = analyze(&spec).unwrap();
        let gap: f64 = (0..6).map(|x| (r.occupancy[(0, x)] - r.occupancy[(1, x)]).abs()).sum();
        assert!((gap - 3.5).abs() < 1e-15);
        assert!(gap > 2.0 * h);
    }

    #[test]
    fn exact_rejects_cyclic_specs() {
        let spec = gen_layered(3, 5, 0.9, 1).unwrap();
        assert!(matches!(
            crossing_time_exact(&spec, 0, 1, DEFAULT_ATOM_CAP),
            Err(Error::Cyclic(_))
        ));
    }

    #[test]
    fn independent_coupling_on_deterministic_specs() {
        let funnel = gen_meeting(2, 2, 3, zero()).unwrap();
        let (mean, se) = crossing_time_upper(&funnel, 0, 1, 1000, 3).unwrap();
        assert_eq!((mean, se), (1.0, 0.0));
        let spec = skip_chain(6);
        let (mean, se) = crossing_time_upper(&spec, 0, 1, 50, 3).unwrap();
        assert_eq!(mean, crossing_time_exact(&spec, 0, 1, 100).unwrap());
        assert_eq!(se, 0.0);
    }

    #[test]
    fn upper_estimate_dominates_exact_value() {
        let spec = gen_layered(3, 5, 0.0, 2).unwrap();
        let exact = crossing_time_exact(&spec, 0, 1, DEFAULT_ATOM_CAP).unwrap();
        let (mean, se) = crossing_time_upper(&spec, 0, 1, 4000, 8).unwrap();
        assert!(mean >= exact - 3.0 * se, "{mean} {se} {exact}");
    }

    #[test]
    fn disjointness() {
        let spec = gen_meeting(3, 4, 6, zero()).unwrap();
        assert!(check_disjoint(&spec, 0, 3).unwrap());
        let c4 = spec.index_of("c4").unwrap();
        assert!(!check_disjoint(&spec, 0, c4).unwrap());
        assert!(!check_disjoint(&spec, 0, 1).unwrap());
        let shop = gen_checkout(&[0.3, 0.6, 0.9], 0.5).unwrap();
        assert!(check_disjoint(&shop, 0, 2).unwrap());
        assert!(!check_disjoint(&shop, 0, 3).unwrap());
    }

    #[test]
    fn disjointness_agrees_with_joint_mass() {
        let spec = gen_layered(2, 5, 0.3, 4).unwrap();
        let report = analyze(&spec).unwrap();
        for s in 0..spec.num_states() {
            for t in 0..spec.num_states() {
                let p = joint_visits(&spec, &report, s, t).unwrap().prob_both;
                let disjoint = check_disjoint(&spec, s, t).unwrap();
                assert_eq!(disjoint, p < 1e-14, "{s} {t} {p}");
            }
        }
    }
}
