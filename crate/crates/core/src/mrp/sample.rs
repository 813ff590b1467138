use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{MrpSpec, Successor};
use crate::error::{Error, Result};

/// Longest trajectory accepted before sampling gives up.
pub const DEFAULT_STEP_CAP: usize = 10_000_000;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of substream `index` under `seed`:
/// `mix64(seed + mix64(index + 0x9e3779b97f4a7c15))` with wrapping adds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Independent random stream for `(seed, index)`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// One episode: `states[t]` is S_t and `rewards[t]` is the reward R_{t+1}
/// collected on leaving it. The final transition enters the terminal state.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the first visit to `s`.
    pub fn first_visit(&self, s: usize) -> Option<usize> {
        self.states.iter().position(|&x| x == s)
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// States followed by one terminal entry.
    pub fn path(&self) -> Vec<Successor> {
        self.states
            .iter()
            .map(|&s| Successor::State(s))
            .chain(std::iter::once(Successor::Terminal))
            .collect()
    }
}

pub fn sample_trajectory<R: Rng + ?Sized>(spec: &MrpSpec, rng: &mut R) -> Result<Trajectory> {
    let start = spec.sample_initial(rng);
    sample_from(spec, start, rng, DEFAULT_STEP_CAP)
}

/// Trajectory started at `start` instead of the initial distribution.
pub fn sample_from<R: Rng + ?Sized>(
    spec: &MrpSpec,
    start: usize,
    rng: &mut R,
    step_cap: usize,
) -> Result<Trajectory> {
    let mut states = vec![start];
    let mut rewards = Vec::new();
    let mut s = start;
    loop {
        if rewards.len() >= step_cap {
            return Err(Error::StepCapExceeded { cap: step_cap });
        }
        let edge = spec.sample_edge(s, rng);
        rewards.push(edge.reward.sample(rng));
        match edge.to {
            Successor::Terminal => break,
            Successor::State(t) => {
                states.push(t);
                s = t;
            }
        }
    }
    Ok(Trajectory { states, rewards })
}

/// `n` independent trajectories sampled from the initial distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub trajectories: Vec<Trajectory>,
    pub spec_fingerprint: u64,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Builds a dataset from externally produced trajectories, checking them
    /// against `spec`.
    pub fn from_trajectories(spec: &MrpSpec, trajectories: Vec<Trajectory>, seed: u64) -> Result<Self> {
        let data = Self {
            trajectories,
            spec_fingerprint: super::io::fingerprint(spec),
            seed,
        };
        data.validate(spec)?;
        Ok(data)
    }

    pub fn validate(&self, spec: &MrpSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDataset(msg));
        if self.trajectories.is_empty() {
            return bad("dataset is empty".into());
        }
        if self.spec_fingerprint != super::io::fingerprint(spec) {
            return bad("fingerprint differs from the spec's".into());
        }
        for (i, traj) in self.trajectories.iter().enumerate() {
            if traj.states.is_empty() || traj.states.len() != traj.rewards.len() {
                return bad(format!(
                    "trajectory {i}: {} states but {} rewards",
                    traj.states.len(),
                    traj.rewards.len()
                ));
            }
            if let Some(r) = traj.rewards.iter().find(|r| !r.is_finite()) {
                return bad(format!("trajectory {i}: non-finite reward {r}"));
            }
            let mut prev = None;
            for (t, &s) in traj.states.iter().enumerate() {
                if s >= spec.num_states() {
                    return bad(format!("trajectory {i}: state index {s} out of range"));
                }
                if let Some(p) = prev {
                    if !spec.edge(p, Successor::State(s)).is_some_and(|e| e.prob > 0.0) {
                        return bad(format!(
                            "trajectory {i}, step {t}: no edge `{}` -> `{}`",
                            spec.name(p),
                            spec.name(s)
                        ));
                    }
                }
                prev = Some(s);
            }
            let last = *traj.states.last().unwrap();
            if !spec.edge(last, Successor::Terminal).is_some_and(|e| e.prob > 0.0) {
                return bad(format!(
                    "trajectory {i}: `{}` cannot enter the terminal state",
                    spec.name(last)
                ));
            }
        }
        Ok(())
    }
}

/// Trajectory `i` is drawn from `substream(seed, i)`, so the result does not
/// depend on how the work is scheduled.
pub fn sample_dataset(spec: &MrpSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("a dataset needs n >= 1 trajectories".into()));
    }
    let trajectories = (0..n as u64)
        .map(|i| sample_trajectory(spec, &mut substream(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        trajectories,
        spec_fingerprint: super::io::fingerprint(spec),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp::{gen_layered, RewardDist, TERMINAL};

    fn fixture_a() -> MrpSpec {
        MrpSpec::builder()
            .state("s0")
            .edge("s0", TERMINAL, 1.0, RewardDist::constant(1.0))
            .initial("s0", 1.0)
            .build()
            .unwrap()
    }

    fn coin_loop() -> MrpSpec {
        MrpSpec::builder()
            .state("s0")
            .edge("s0", "s0", 0.5, RewardDist::constant(0.0))
            .edge("s0", TERMINAL, 0.5, RewardDist::constant(1.0))
            .initial("s0", 1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn deterministic_chain() {
        let t = sample_trajectory(&fixture_a(), &mut substream(0, 0)).unwrap();
        assert_eq!(t.states, vec![0]);
        assert_eq!(t.rewards, vec![1.0]);
    }

    #[test]
    fn layered_trajectory_visits_one_state_per_layer() {
        let spec = gen_layered(2, 3, 0.0, 11).unwrap();
        for i in 0..200 {
            let t = sample_trajectory(&spec, &mut substream(5, i)).unwrap();
            assert_eq!(t.len(), 2);
            assert!(spec.name(t.states[0]).starts_with("s1_"));
            assert!(spec.name(t.states[1]).starts_with("s2_"));
        }
    }

    #[test]
    fn geometric_length_has_mean_two() {
        let spec = coin_loop();
        let n = 100_000;
        let lens: Vec<f64> = (0..n)
            .map(|i| sample_trajectory(&spec, &mut substream(17, i)).unwrap().len() as f64)
            .collect();
        let mean = lens.iter().sum::<f64>() / n as f64;
        // Var of Geometric(1/2) on {1,2,..} is (1-p)/p^2 = 2
        let se = (2.0 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn step_cap_is_enforced() {
        let err = sample_from(&coin_loop(), 0, &mut substream(1, 3), 0).unwrap_err();
        assert!(matches!(err, Error::StepCapExceeded { cap: 0 }));
    }

    #[test]
    fn datasets_are_pure_functions_of_their_seed() {
        let spec = gen_layered(3, 5, 0.1, 2).unwrap();
        let a = sample_dataset(&spec, 50, 9).unwrap();
        let b = sample_dataset(&spec, 50, 9).unwrap();
        let c = sample_dataset(&spec, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trajectories, c.trajectories);
        a.validate(&spec).unwrap();
    }

    #[test]
    fn fixture_a_dataset() {
        let spec = fixture_a();
        let d = sample_dataset(&spec, 3, 0).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.trajectories.iter().all(|t| t.states == [0] && t.rewards == [1.0]));
        assert!(sample_dataset(&spec, 0, 0).is_err());
    }

    #[test]
    fn validation_rejects_foreign_trajectories() {
        let spec = gen_layered(2, 3, 0.0, 1).unwrap();
        let good = sample_dataset(&spec, 2, 1).unwrap();
        let mut bad = good.clone();
        bad.trajectories[0].states.reverse();
        assert!(bad.validate(&spec).is_err());
        let mut nan = good.clone();
        nan.trajectories[1].rewards[0] = f64::NAN;
        assert!(nan.validate(&spec).is_err());
        let other = gen_layered(2, 3, 0.0, 2).unwrap();
        assert!(good.validate(&other).is_err());
    }

    #[test]
    fn seed_derivation_is_stable() {
        // frozen so that the stream layout stays reproducible across releases
        assert_eq!(mix64(0), 0);
        assert_ne!(derive_seed(1, 0), derive_seed(0, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
