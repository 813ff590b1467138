//! Replicated experiments.
//!
//! Every row of a sweep is an independent batch of `K` replications. Each
//! replication draws `n` fresh trajectories, runs both estimators and
//! records their errors against the exact values. Replication `k` of row
//! `i` is seeded with `derive_seed(derive_seed(seed, i), k)`, and results
//! are collected in index order, so the output does not depend on the
//! number of threads.
//!
//! A replication in which a target state is never visited is redrawn from
//! `derive_seed(replication_seed, attempt)`. The number of redraws is
//! reported per row, and rows where it reaches 5% of `K` are flagged.

mod config;
mod output;
pub mod stats;

use rayon::prelude::*;
use rayon::ThreadPool;

pub use config::{ExperimentConfig, ExperimentKind};
pub use output::{sidecar_path, ExperimentOutput, Rows};
pub use stats::{binomial_interval, mse_with_ci, normal_cdf, pairwise_sum, ratio_with_ci, Interval, Z_95};

use crate::analysis::{
    analyze, mc_advantage_asymptotic_variance, mc_asymptotic_variance,
    td_advantage_asymptotic_variance, td_asymptotic_variance, AnalysisReport, Weighting,
};
use crate::error::{Error, Result};
use crate::estimators::{mc_from_trajectories, td_from_trajectories};
use crate::mrp::{
    branch_name, derive_seed, gen_layered, gen_meeting, layered_name, sample_trajectory, substream,
    MrpSpec, RewardDist,
};

/// Redraws allowed for a single replication before giving up.
pub const MAX_REDRAWS: u64 = 1000;
/// Rows whose redraw count reaches this fraction of `K` are flagged.
pub const REDRAW_FLAG_FRACTION: f64 = 0.05;
/// Mixed into the base seed when generating specs, so that spec randomness
/// and sampling randomness never share a stream.
const SPEC_SALT: u64 = 0x5bd1_e995_0000_0001;

/// Seed of the spec generated for sweep value `value`.
pub fn spec_seed(seed: u64, value: u64) -> u64 {
    derive_seed(seed ^ SPEC_SALT, value)
}

/// Empirical and theoretical MSEs for `V(s)`, `V(s')` and `V(s) - V(s')`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub sweep_var: usize,
    pub td: [Interval; 3],
    pub mc: [Interval; 3],
    /// Asymptotic variance divided by `n`.
    pub theo_td: [f64; 3],
    pub theo_mc: [f64; 3],
    pub redraws: usize,
    pub flagged: bool,
}

/// TD/MC MSE ratios for `V(s)`, `V(s')` and the advantage.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub sweep_var: usize,
    pub ratio: [Interval; 3],
    pub theo_ratio: [f64; 3],
    pub redraws: usize,
    pub flagged: bool,
}

/// Frequency of ranking the lower-valued state above the higher one.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretRow {
    pub n: usize,
    pub regret_td: f64,
    pub regret_mc: f64,
    pub approx_td: f64,
    pub approx_mc: f64,
    pub redraws: usize,
    pub flagged: bool,
}

/// Estimates at the two target states from one replication.
#[derive(Clone, Copy, Debug)]
struct Replication {
    td: [f64; 2],
    mc: [f64; 2],
    redraws: usize,
}

fn replicate(spec: &MrpSpec, s: usize, sp: usize, n: usize, seed: u64) -> Result<Replication> {
    for attempt in 0..=MAX_REDRAWS {
        let attempt_seed = derive_seed(seed, attempt);
        let trajectories = (0..n as u64)
            .map(|i| sample_trajectory(spec, &mut substream(attempt_seed, i)))
            .collect::<Result<Vec<_>>>()?;
        let mc = mc_from_trajectories(&trajectories, spec);
        if mc.count(s) == 0 || mc.count(sp) == 0 {
            continue;
        }
        let td = td_from_trajectories(&trajectories, spec)?;
        return Ok(Replication {
            td: [td.value(s)?, td.value(sp)?],
            mc: [mc.value(s)?, mc.value(sp)?],
            redraws: attempt as usize,
        });
    }
    let missing = if mc_visits(spec, s) { sp } else { s };
    Err(Error::Undefined(spec.name(missing).to_string()))
}

fn mc_visits(spec: &MrpSpec, s: usize) -> bool {
    analyze(spec).is_ok_and(|r| r.visit_prob[s] > 0.0)
}

/// Errors of TD and MC for `(s, s', advantage)` across replications.
struct Errors {
    td: [Vec<f64>; 3],
    mc: [Vec<f64>; 3],
    redraws: usize,
}

impl Errors {
    fn new(reps: &[Replication], truth: [f64; 2]) -> Self {
        let err = |est: [f64; 2]| {
            [
                est[0] - truth[0],
                est[1] - truth[1],
                (est[0] - est[1]) - (truth[0] - truth[1]),
            ]
        };
        let mut td: [Vec<f64>; 3] = Default::default();
        let mut mc: [Vec<f64>; 3] = Default::default();
        for r in reps {
            for (v, e) in td.iter_mut().zip(err(r.td)) {
                v.push(e);
            }
            for (v, e) in mc.iter_mut().zip(err(r.mc)) {
                v.push(e);
            }
        }
        Self {
            td,
            mc,
            redraws: reps.iter().map(|r| r.redraws).sum(),
        }
    }
}

fn flagged(redraws: usize, k: usize) -> bool {
    redraws as f64 >= REDRAW_FLAG_FRACTION * k as f64
}

/// `[td(s), td(s'), td(adv)]` and the same for MC.
fn asymptotic_variances(
    spec: &MrpSpec,
    report: &AnalysisReport,
    s: usize,
    sp: usize,
) -> Result<([f64; 3], [f64; 3])> {
    let td = [
        td_asymptotic_variance(report, &Weighting::point(s))?,
        td_asymptotic_variance(report, &Weighting::point(sp))?,
        td_advantage_asymptotic_variance(report, s, sp)?,
    ];
    let mc = [
        mc_asymptotic_variance(report, s),
        mc_asymptotic_variance(report, sp),
        mc_advantage_asymptotic_variance(spec, report, s, sp)?,
    ];
    Ok((td, mc))
}

/// Runs experiments on a dedicated thread pool.
pub struct Harness {
    pool: ThreadPool,
}

impl Harness {
    /// `threads = None` uses the machine's parallelism.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            if t == 0 {
                return Err(Error::InvalidParameter("thread count must be >= 1".into()));
            }
            builder = builder.num_threads(t);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start thread pool: {e}")))?;
        Ok(Self { pool })
    }

    fn replications(
        &self,
        spec: &MrpSpec,
        (s, sp): (usize, usize),
        n: usize,
        k: usize,
        row_seed: u64,
    ) -> Result<Vec<Replication>> {
        self.pool.install(|| {
            (0..k as u64)
                .into_par_iter()
                .map(|r| replicate(spec, s, sp, n, derive_seed(row_seed, r)))
                .collect()
        })
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
        cfg.validate()?;
        let rows = match cfg.kind {
            ExperimentKind::HorizonSweep => Rows::Sweep(self.horizon_sweep(cfg)?),
            ExperimentKind::SampleSweep => Rows::Sweep(self.sample_sweep(cfg)?),
            ExperimentKind::MeetingSweep => Rows::Ratio(self.meeting_sweep(cfg)?),
            ExperimentKind::Regret => Rows::Regret(self.regret(cfg)?),
        };
        Ok(ExperimentOutput::new(cfg, rows))
    }

    fn mse_row(
        &self,
        cfg: &ExperimentConfig,
        spec: &MrpSpec,
        targets: (usize, usize),
        n: usize,
        index: usize,
        sweep_var: usize,
    ) -> Result<SweepRow> {
        let report = analyze(spec)?;
        let (s, sp) = targets;
        let k = cfg.replications;
        let reps = self.replications(spec, targets, n, k, derive_seed(cfg.seed, index as u64))?;
        let errors = Errors::new(&reps, [report.values[s], report.values[sp]]);
        let ci = |v: &[Vec<f64>; 3]| -> Result<[Interval; 3]> {
            Ok([mse_with_ci(&v[0], Z_95)?, mse_with_ci(&v[1], Z_95)?, mse_with_ci(&v[2], Z_95)?])
        };
        let (td_var, mc_var) = asymptotic_variances(spec, &report, s, sp)?;
        Ok(SweepRow {
            sweep_var,
            td: ci(&errors.td)?,
            mc: ci(&errors.mc)?,
            theo_td: td_var.map(|v| v / n as f64),
            theo_mc: mc_var.map(|v| v / n as f64),
            redraws: errors.redraws,
            flagged: flagged(errors.redraws, k),
        })
    }

    pub fn horizon_sweep(&self, cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
        cfg.validate()?;
        let n = cfg.n.expect("validated");
        cfg.horizons
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let spec = gen_layered(cfg.width, t, cfg.back_prob(), spec_seed(cfg.seed, t as u64))?;
                let targets = layered_targets(cfg, &spec)?;
                self.mse_row(cfg, &spec, targets, n, i, t)
            })
            .collect()
    }

    pub fn sample_sweep(&self, cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
        cfg.validate()?;
        let spec = single_spec(cfg)?;
        let targets = layered_targets(cfg, &spec)?;
        cfg.sample_sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| self.mse_row(cfg, &spec, targets, n, i, n))
            .collect()
    }

    pub fn meeting_sweep(&self, cfg: &ExperimentConfig) -> Result<Vec<RatioRow>> {
        cfg.validate()?;
        let n = cfg.n.expect("validated");
        let k = cfg.replications;
        cfg.meetings
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let spec = gen_meeting(cfg.branches, h, cfg.horizon(), RewardDist::gaussian(0.0, 1.0))?;
                let (s, sp) = resolve_targets(cfg, &spec, (branch_name(1, 1), branch_name(2, 1)))?;
                let report = analyze(&spec)?;
                let reps = self.replications(&spec, (s, sp), n, k, derive_seed(cfg.seed, i as u64))?;
                let errors = Errors::new(&reps, [report.values[s], report.values[sp]]);
                let sq = |v: &Vec<f64>| v.iter().map(|e| e * e).collect::<Vec<f64>>();
                let mut ratio = [Interval { estimate: 0.0, lo: 0.0, hi: 0.0 }; 3];
                for (j, r) in ratio.iter_mut().enumerate() {
                    *r = ratio_with_ci(&sq(&errors.td[j]), &sq(&errors.mc[j]), Z_95)?;
                }
                let (td_var, mc_var) = asymptotic_variances(&spec, &report, s, sp)?;
                let mut theo_ratio = [0.0; 3];
                for (j, t) in theo_ratio.iter_mut().enumerate() {
                    if mc_var[j] <= 0.0 {
                        return Err(Error::DegenerateRatio(spec.name(s).to_string()));
                    }
                    *t = td_var[j] / mc_var[j];
                }
                Ok(RatioRow {
                    sweep_var: h,
                    ratio,
                    theo_ratio,
                    redraws: errors.redraws,
                    flagged: flagged(errors.redraws, k),
                })
            })
            .collect()
    }

    pub fn regret(&self, cfg: &ExperimentConfig) -> Result<Vec<RegretRow>> {
        cfg.validate()?;
        let spec = single_spec(cfg)?;
        let (a, b) = layered_targets(cfg, &spec)?;
        let report = analyze(&spec)?;
        // s is the lower-valued state, so ranking s above s' is the mistake
        let (s, sp) = if report.values[a] <= report.values[b] { (a, b) } else { (b, a) };
        let gap = report.values[sp] - report.values[s];
        if gap.abs() < 1e-12 {
            return Err(Error::DegenerateAdvantage(gap));
        }
        let sigma_td = td_advantage_asymptotic_variance(&report, s, sp)?.sqrt();
        let sigma_mc = mc_advantage_asymptotic_variance(&spec, &report, s, sp)?.sqrt();
        let approx = |sigma: f64, n: usize| {
            if sigma > 0.0 {
                normal_cdf(-gap * (n as f64).sqrt() / sigma)
            } else {
                0.0
            }
        };
        let k = cfg.replications;
        cfg.sample_sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let reps = self.replications(&spec, (s, sp), n, k, derive_seed(cfg.seed, i as u64))?;
                let wrong = |f: fn(&Replication) -> [f64; 2]| {
                    reps.iter().filter(|r| f(r)[0] > f(r)[1]).count() as f64 / k as f64
                };
                let redraws = reps.iter().map(|r| r.redraws).sum();
                Ok(RegretRow {
                    n,
                    regret_td: wrong(|r| r.td),
                    regret_mc: wrong(|r| r.mc),
                    approx_td: approx(sigma_td, n),
                    approx_mc: approx(sigma_mc, n),
                    redraws,
                    flagged: flagged(redraws, k),
                })
            })
            .collect()
    }
}

/// The layered spec shared by every row of sample sweeps and regret curves.
pub fn single_spec(cfg: &ExperimentConfig) -> Result<MrpSpec> {
    gen_layered(cfg.width, cfg.horizon(), cfg.back_prob(), spec_seed(cfg.seed, 0))
}

fn resolve_targets(cfg: &ExperimentConfig, spec: &MrpSpec, default: (String, String)) -> Result<(usize, usize)> {
    let (a, b) = cfg.states.clone().unwrap_or(default);
    let pair = (spec.index_of(&a)?, spec.index_of(&b)?);
    if pair.0 == pair.1 {
        return Err(Error::InvalidParameter("target states must differ".into()));
    }
    Ok(pair)
}

fn layered_targets(cfg: &ExperimentConfig, spec: &MrpSpec) -> Result<(usize, usize)> {
    resolve_targets(cfg, spec, (layered_name(1, 1), layered_name(1, 2)))
}

pub fn run_horizon_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    Harness::new(None)?.horizon_sweep(cfg)
}

pub fn run_meeting_sweep(cfg: &ExperimentConfig) -> Result<Vec<RatioRow>> {
    Harness::new(None)?.meeting_sweep(cfg)
}

pub fn run_sample_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    Harness::new(None)?.sample_sweep(cfg)
}

pub fn run_regret(cfg: &ExperimentConfig) -> Result<Vec<RegretRow>> {
    Harness::new(None)?.regret(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn horizon_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::HorizonSweep, 4, 3);
        cfg.horizons = vec![10, 20];
        cfg.n = Some(50);
        cfg
    }

    #[test]
    fn horizon_sweep_shape_and_theory() {
        let rows = Harness::new(Some(2)).unwrap().horizon_sweep(&horizon_cfg()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows.iter().map(|r| r.sweep_var).collect::<Vec<_>>(), vec![10, 20]);
        for r in &rows {
            for j in 0..3 {
                assert!(r.theo_td[j] <= r.theo_mc[j] + 1e-12);
                assert!(r.td[j].lo <= r.td[j].estimate && r.td[j].estimate <= r.td[j].hi);
            }
        }
    }

    #[test]
    fn output_does_not_depend_on_thread_count() {
        let cfg = horizon_cfg();
        let one = Harness::new(Some(1)).unwrap().run(&cfg).unwrap();
        let four = Harness::new(Some(4)).unwrap().run(&cfg).unwrap();
        assert!(one.csv == four.csv);
        assert!(one.sidecar == four.sidecar);
    }

    #[test]
    fn unvisited_targets_are_redrawn() {
        // with one trajectory per replication each of five layer-1 states is
        // missed most of the time
        let mut cfg = ExperimentConfig::new(ExperimentKind::HorizonSweep, 20, 5);
        cfg.horizons = vec![4];
        cfg.n = Some(3);
        let rows = Harness::new(Some(2)).unwrap().horizon_sweep(&cfg).unwrap();
        assert!(rows[0].redraws > 0);
        assert!(rows[0].flagged);
    }

    #[test]
    fn meeting_sweep_endpoints() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::MeetingSweep, 30, 9);
        cfg.meetings = vec![2, 10];
        cfg.horizon = Some(10);
        cfg.n = Some(40);
        let rows = Harness::new(Some(2)).unwrap().meeting_sweep(&cfg).unwrap();
        let last = &rows[1];
        for j in 0..3 {
            assert!((last.ratio[j].estimate - 1.0).abs() < 1e-9);
            assert!((last.theo_ratio[j] - 1.0).abs() < 1e-12);
        }
        assert!(rows[0].theo_ratio[2] < 0.2);
    }

    #[test]
    fn regret_orders_the_states() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Regret, 10, 2);
        cfg.sample_sizes = vec![20, 2000];
        cfg.horizon = Some(6);
        let rows = Harness::new(Some(2)).unwrap().regret(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].approx_td <= rows[0].approx_td);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.regret_mc)));
    }
}
