//! JSON file format for specs.
//!
//! ```json
//! {
//!   "states": ["s0"],
//!   "transitions": [
//!     {"from": "s0", "to": "__terminal__", "p": 1.0000000000000000e0,
//!      "reward": {"kind": "uniform", "mean": 0.0e0, "halfwidth": 1.0e0}}
//!   ],
//!   "initial": [{"state": "s0", "p": 1.0000000000000000e0}]
//! }
//! ```
//!
//! Reward kinds are `constant` (`mean` only), `uniform` (`mean`,
//! `halfwidth`) and `gaussian` (`mean`, `sd`). Numbers are written with 17
//! significant digits so a spec survives a write/read cycle bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use super::spec::{MrpSpec, RewardDist};
use crate::error::{Error, Result};

/// `x` with 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // not representable in JSON; callers only hit this for CSV cells
        format!("{x}")
    }
}

fn sig17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(serde::ser::Error::custom(format!("cannot write non-finite number {x}")));
    }
    let raw = RawValue::from_string(format_f64(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

fn sig17_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => sig17(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    states: Vec<String>,
    transitions: Vec<TransitionEntry>,
    initial: Vec<InitialEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    from: String,
    to: String,
    #[serde(serialize_with = "sig17")]
    p: f64,
    reward: RewardEntry,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardEntry {
    kind: String,
    #[serde(serialize_with = "sig17")]
    mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "sig17_opt")]
    halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "sig17_opt")]
    sd: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialEntry {
    state: String,
    #[serde(serialize_with = "sig17")]
    p: f64,
}

impl From<RewardDist> for RewardEntry {
    fn from(r: RewardDist) -> Self {
        let (kind, halfwidth, sd) = match r {
            RewardDist::Constant { .. } => ("constant", None, None),
            RewardDist::Uniform { half_width, .. } => ("uniform", Some(half_width), None),
            RewardDist::Gaussian { sd, .. } => ("gaussian", None, Some(sd)),
        };
        RewardEntry {
            kind: kind.to_string(),
            mean: r.mean(),
            halfwidth,
            sd,
        }
    }
}

impl TryFrom<RewardEntry> for RewardDist {
    type Error = Error;

    fn try_from(r: RewardEntry) -> Result<Self> {
        match (r.kind.as_str(), r.halfwidth, r.sd) {
            ("constant", None, None) => Ok(RewardDist::constant(r.mean)),
            ("uniform", Some(h), None) => Ok(RewardDist::uniform(r.mean, h)),
            ("gaussian", None, Some(sd)) => Ok(RewardDist::gaussian(r.mean, sd)),
            ("constant" | "uniform" | "gaussian", _, _) => Err(Error::Format(format!(
                "reward of kind `{}` has the wrong parameters",
                r.kind
            ))),
            (other, _, _) => Err(Error::Format(format!("unknown reward kind `{other}`"))),
        }
    }
}

pub fn to_json(spec: &MrpSpec) -> String {
    let file = SpecFile {
        states: spec.names().to_vec(),
        transitions: (0..spec.num_states())
            .flat_map(|s| {
                spec.edges(s).iter().map(move |e| TransitionEntry {
                    from: spec.name(s).to_string(),
                    to: spec.successor_name(e.to).to_string(),
                    p: e.prob,
                    reward: e.reward.into(),
                })
            })
            .collect(),
        initial: spec
            .initial()
            .iter()
            .map(|&(s, p)| InitialEntry {
                state: spec.name(s).to_string(),
                p,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("spec values are finite");
    text.push('\n');
    text
}

pub fn from_json(text: &str) -> Result<MrpSpec> {
    let file: SpecFile = serde_json::from_str(text)?;
    let mut b = MrpSpec::builder().states(file.states);
    for t in file.transitions {
        let reward = RewardDist::try_from(t.reward)?;
        b = b.edge(t.from, t.to, t.p, reward);
    }
    for i in file.initial {
        b = b.initial(i.state, i.p);
    }
    b.build()
}

pub fn read_spec(path: impl AsRef<Path>) -> Result<MrpSpec> {
    from_json(&fs::read_to_string(path)?)
}

/// 64-bit digest of the canonical serialization.
pub fn fingerprint(spec: &MrpSpec) -> u64 {
    let digest = Sha256::digest(to_json(spec).as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
