//! Benchmark families.
//!
//! State names are stable so experiment configs can refer to them:
//! `s{layer}_{index}` for layered specs, `h{branch}_{step}` / `c{step}` for
//! meeting-horizon specs, and `page{i}` / `checkout` / `sale` for the
//! checkout funnel. All indices are 1-based.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{MrpSpec, MrpSpecBuilder, RewardDist, TERMINAL};
use crate::error::{Error, Result};

/// Lower end of the per-edge uniform weights in layered rows. Keeps every
/// forward edge bounded away from zero.
pub const LAYERED_WEIGHT_FLOOR: f64 = 0.05;
/// Probability mass given to a backward edge; the forward row keeps the rest.
pub const BACKWARD_EDGE_MASS: f64 = 0.3;

pub fn layered_name(layer: usize, index: usize) -> String {
    format!("s{layer}_{index}")
}

pub fn branch_name(branch: usize, step: usize) -> String {
    format!("h{branch}_{step}")
}

pub fn shared_name(step: usize) -> String {
    format!("c{step}")
}

pub fn page_name(i: usize) -> String {
    format!("page{i}")
}

/// Layered MRP with `width` states in each of `horizon - 1` layers.
///
/// Layer `t` moves to layer `t + 1` (the last layer to the terminal state)
/// with weights drawn as normalized independent uniforms on `(0.05, 1]`.
/// With probability `back_prob` a state also gets one edge to a uniformly
/// chosen state in its own or an earlier layer; that edge carries mass
/// [`BACKWARD_EDGE_MASS`] and the forward row is scaled down to match.
/// Every edge reward is uniform with half-width 1 around a mean drawn
/// uniformly from `[-1, 1]`. The initial distribution is uniform over
/// layer 1.
pub fn gen_layered(width: usize, horizon: usize, back_prob: f64, seed: u64) -> Result<MrpSpec> {
    if width < 1 {
        return Err(Error::InvalidParameter("layered width must be >= 1".into()));
    }
    if horizon < 2 {
        return Err(Error::InvalidParameter("layered horizon must be >= 2".into()));
    }
    if !(0.0..1.0).contains(&back_prob) {
        return Err(Error::InvalidParameter(format!(
            "backward-edge probability {back_prob} is outside [0, 1)"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = horizon - 1;
    let mut b = MrpSpecBuilder::default();
    for t in 1..=layers {
        for w in 1..=width {
            b.push_state(layered_name(t, w));
        }
    }

    let reward = |rng: &mut ChaCha8Rng| RewardDist::uniform(rng.random_range(-1.0..=1.0), 1.0);

    for t in 1..=layers {
        for w in 1..=width {
            let from = layered_name(t, w);
            let mut forward: Vec<(String, f64)> = if t == layers {
                vec![(TERMINAL.to_string(), 1.0)]
            } else {
                let weights: Vec<f64> = (0..width)
                    .map(|_| LAYERED_WEIGHT_FLOOR + (1.0 - LAYERED_WEIGHT_FLOOR) * (1.0 - rng.random::<f64>()))
                    .collect();
                let total: f64 = weights.iter().sum();
                weights
                    .into_iter()
                    .enumerate()
                    .map(|(j, x)| (layered_name(t + 1, j + 1), x / total))
                    .collect()
            };

            let backward = if back_prob > 0.0 && rng.random::<f64>() < back_prob {
                let k = rng.random_range(0..t * width);
                Some(layered_name(k / width + 1, k % width + 1))
            } else {
                None
            };

            if let Some(target) = backward {
                for (_, p) in &mut forward {
                    *p *= 1.0 - BACKWARD_EDGE_MASS;
                }
                forward.push((target, BACKWARD_EDGE_MASS));
            }
            for (to, p) in forward {
                let r = reward(&mut rng);
                b.push_edge(from.clone(), to, p, r);
            }
        }
    }
    for w in 1..=width {
        b.push_initial(layered_name(1, w), 1.0 / width as f64);
    }
    b.build()
}

/// `branches` disjoint deterministic chains of `meeting - 1` states that all
/// feed one shared chain `c{meeting}..c{horizon-1}`, then terminate. Every
/// trajectory has `horizon - 1` non-terminal states. With
/// `meeting == horizon` the chains never meet; with `meeting == 2` every
/// head feeds the shared chain directly.
pub fn gen_meeting(
    branches: usize,
    meeting: usize,
    horizon: usize,
    reward: RewardDist,
) -> Result<MrpSpec> {
    if branches < 2 {
        return Err(Error::InvalidParameter("meeting spec needs >= 2 branches".into()));
    }
    if meeting < 2 || meeting > horizon {
        return Err(Error::InvalidParameter(format!(
            "meeting horizon {meeting} must lie in [2, {horizon}]"
        )));
    }
    let mut b = MrpSpecBuilder::default();
    for k in 1..=branches {
        for t in 1..meeting {
            b.push_state(branch_name(k, t));
        }
    }
    for t in meeting..horizon {
        b.push_state(shared_name(t));
    }
    let merge = if meeting < horizon {
        shared_name(meeting)
    } else {
        TERMINAL.to_string()
    };
    for k in 1..=branches {
        for t in 1..meeting - 1 {
            b.push_edge(branch_name(k, t), branch_name(k, t + 1), 1.0, reward);
        }
        b.push_edge(branch_name(k, meeting - 1), merge.clone(), 1.0, reward);
        b.push_initial(branch_name(k, 1), 1.0 / branches as f64);
    }
    for t in meeting..horizon {
        let next = if t + 1 < horizon {
            shared_name(t + 1)
        } else {
            TERMINAL.to_string()
        };
        b.push_edge(shared_name(t), next, 1.0, reward);
    }
    b.build()
}

/// Website example: each page leads to `checkout` with its click
/// probability, and checkout converts to `sale` (reward 1) with
/// `sale_prob`. Zero-probability edges are omitted.
pub fn gen_checkout(click_probs: &[f64], sale_prob: f64) -> Result<MrpSpec> {
    if click_probs.is_empty() {
        return Err(Error::InvalidParameter("checkout spec needs at least one page".into()));
    }
    let in_unit = |p: f64| (0.0..=1.0).contains(&p);
    if !click_probs.iter().copied().all(in_unit) || !in_unit(sale_prob) {
        return Err(Error::InvalidParameter("probabilities must lie in [0, 1]".into()));
    }
    let zero = RewardDist::constant(0.0);
    let k = click_probs.len();
    let mut b = MrpSpecBuilder::default();
    for i in 1..=k {
        b.push_state(page_name(i));
    }
    b.push_state("checkout");
    b.push_state("sale");

    let push = |b: &mut MrpSpecBuilder, from: &str, to: &str, p: f64, r: RewardDist| {
        if p > 0.0 {
            b.push_edge(from, to, p, r);
        }
    };
    for (i, &c) in click_probs.iter().enumerate() {
        let page = page_name(i + 1);
        push(&mut b, &page, "checkout", c, zero);
        push(&mut b, &page, TERMINAL, 1.0 - c, zero);
        b.push_initial(page, 1.0 / k as f64);
    }
    push(&mut b, "checkout", "sale", sale_prob, RewardDist::constant(1.0));
    push(&mut b, "checkout", TERMINAL, 1.0 - sale_prob, zero);
    b.push_edge("sale", TERMINAL, 1.0, zero);
    b.build()
}
