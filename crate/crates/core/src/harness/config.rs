use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Layered specs of growing horizon; MSEs per horizon.
    HorizonSweep,
    /// Meeting-horizon specs; TD/MC MSE ratios per meeting step.
    MeetingSweep,
    /// One layered spec; MSEs per number of trajectories.
    SampleSweep,
    /// One layered spec; probability of ranking two states wrongly per
    /// number of trajectories.
    Regret,
}

/// Experiment description, read from JSON. Unset optional fields take the
/// per-kind defaults documented on the accessors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Trajectories per replication (fixed sweeps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Replications per row.
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_width")]
    pub width: usize,
    /// T values of a horizon sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<usize>,
    /// H values of a meeting sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub meetings: Vec<usize>,
    /// n values of sample sweeps and regret curves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub back_prob: Option<f64>,
    #[serde(default = "default_branches")]
    pub branches: usize,
    /// Target states `(s, s')`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_width() -> usize {
    5
}

fn default_branches() -> usize {
    5
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, replications: usize, seed: u64) -> Self {
        Self {
            kind,
            n: None,
            replications,
            seed,
            width: default_width(),
            horizons: Vec::new(),
            meetings: Vec::new(),
            sample_sizes: Vec::new(),
            horizon: None,
            back_prob: None,
            branches: default_branches(),
            states: None,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// T for single-spec kinds: 20 for meeting sweeps, 120 otherwise.
    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(match self.kind {
            ExperimentKind::MeetingSweep => 20,
            _ => 120,
        })
    }

    /// Backward-edge probability: 0.1 for sample sweeps and regret curves,
    /// 0 for horizon sweeps.
    pub fn back_prob(&self) -> f64 {
        self.back_prob.unwrap_or(match self.kind {
            ExperimentKind::SampleSweep | ExperimentKind::Regret => 0.1,
            _ => 0.0,
        })
    }

    /// The swept values, in order.
    pub fn sweep(&self) -> &[usize] {
        match self.kind {
            ExperimentKind::HorizonSweep => &self.horizons,
            ExperimentKind::MeetingSweep => &self.meetings,
            ExperimentKind::SampleSweep | ExperimentKind::Regret => &self.sample_sizes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.replications < 2 {
            return bad(format!("replications must be >= 2, got {}", self.replications));
        }
        let sweep_name = match self.kind {
            ExperimentKind::HorizonSweep => "horizons",
            ExperimentKind::MeetingSweep => "meetings",
            ExperimentKind::SampleSweep | ExperimentKind::Regret => "sample_sizes",
        };
        let sweep = self.sweep();
        if sweep.is_empty() {
            return bad(format!("{sweep_name} must be non-empty for this experiment kind"));
        }
        if sweep.windows(2).any(|w| w[0] > w[1]) {
            return bad(format!("{sweep_name} must be sorted"));
        }
        let needs_n = matches!(self.kind, ExperimentKind::HorizonSweep | ExperimentKind::MeetingSweep);
        match self.n {
            Some(0) => return bad("n must be >= 1".into()),
            None if needs_n => return bad("n is required for this experiment kind".into()),
            _ => {}
        }
        if sweep.contains(&0) && !needs_n {
            return bad("sample sizes must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.back_prob()) {
            return bad(format!("back_prob {} is outside [0, 1)", self.back_prob()));
        }
        match self.kind {
            ExperimentKind::HorizonSweep => {
                if sweep[0] < 2 {
                    return bad("horizons must be >= 2".into());
                }
            }
            ExperimentKind::MeetingSweep => {
                let t = self.horizon();
                if sweep[0] < 2 || sweep[sweep.len() - 1] > t {
                    return bad(format!("meetings must lie in [2, {t}]"));
                }
                if self.branches < 2 {
                    return bad("branches must be >= 2".into());
                }
            }
            ExperimentKind::SampleSweep | ExperimentKind::Regret => {
                if self.horizon() < 2 {
                    return bad("horizon must be >= 2".into());
                }
            }
        }
        if self.states.is_none() && self.width < 2 && self.kind != ExperimentKind::MeetingSweep {
            return bad("width must be >= 2 unless target states are given".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_horizon_sweep() {
        let cfg = ExperimentConfig::from_json(
            r#"{"kind": "horizon-sweep", "horizons": [10, 20], "n": 50,
                "replications": 4, "seed": 1}"#,
        )
        .unwrap();
        assert_eq!(cfg.sweep(), &[10, 20]);
        assert_eq!(cfg.width, 5);
        assert_eq!(cfg.back_prob(), 0.0);
    }

    #[test]
    fn defaults_depend_on_kind() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Regret, 10, 0);
        cfg.sample_sizes = vec![100];
        cfg.validate().unwrap();
        assert_eq!((cfg.horizon(), cfg.back_prob()), (120, 0.1));
        cfg.kind = ExperimentKind::MeetingSweep;
        cfg.meetings = vec![2, 20];
        cfg.n = Some(200);
        cfg.validate().unwrap();
        assert_eq!(cfg.horizon(), 20);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = r#""n": 5, "replications": 4, "seed": 1"#;
        for body in [
            r#""kind": "horizon-sweep", "horizons": []"#,
            r#""kind": "horizon-sweep", "horizons": [20, 10]"#,
            r#""kind": "meeting-sweep", "meetings": [2, 30]"#,
            r#""kind": "regret", "sample_sizes": [0]"#,
        ] {
            let text = format!("{{{body}, {base}}}");
            assert!(ExperimentConfig::from_json(&text).is_err(), "{text}");
        }
        let one_rep = r#"{"kind": "horizon-sweep", "horizons": [3], "n": 5, "replications": 1, "seed": 0}"#;
        assert!(ExperimentConfig::from_json(one_rep).is_err());
        let unknown = r#"{"kind": "horizon-sweep", "horizons": [3], "n": 5, "replications": 2, "seed": 0, "typo": 1}"#;
        assert!(ExperimentConfig::from_json(unknown).is_err());
    }
}
