use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::{RatioRow, RegretRow, SweepRow, MAX_REDRAWS, REDRAW_FLAG_FRACTION, Z_95};
use crate::mrp::io::format_f64;

#[derive(Clone, Debug, PartialEq)]
pub enum Rows {
    Sweep(Vec<SweepRow>),
    Ratio(Vec<RatioRow>),
    Regret(Vec<RegretRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Sweep(r) => r.len(),
            Rows::Ratio(r) => r.len(),
            Rows::Regret(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn flagged(&self) -> Vec<usize> {
        let flags: Vec<bool> = match self {
            Rows::Sweep(r) => r.iter().map(|x| x.flagged).collect(),
            Rows::Ratio(r) => r.iter().map(|x| x.flagged).collect(),
            Rows::Regret(r) => r.iter().map(|x| x.flagged).collect(),
        };
        flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    }
}

/// A finished experiment: the table, its metadata and the rows themselves.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub rows: Rows,
    pub csv: String,
    /// JSON echo of the config plus interval and redraw metadata.
    pub sidecar: String,
}

/// `results/x.csv` -> `results/x.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

const TARGETS: [&str; 3] = ["s", "sp", "adv"];

fn header(rows: &Rows) -> Vec<String> {
    let mut cols = vec!["sweep_var".to_string()];
    match rows {
        Rows::Sweep(_) => {
            for m in ["td", "mc"] {
                for t in TARGETS {
                    let base = format!("mse_{m}_{t}");
                    cols.push(base.clone());
                    cols.push(format!("{base}_lo"));
                    cols.push(format!("{base}_hi"));
                }
            }
            for m in ["td", "mc"] {
                for t in TARGETS {
                    cols.push(format!("theo_{m}_{t}"));
                }
            }
        }
        Rows::Ratio(_) => {
            for t in TARGETS {
                cols.push(format!("ratio_{t}"));
                cols.push(format!("ratio_{t}_lo"));
                cols.push(format!("ratio_{t}_hi"));
            }
            for t in TARGETS {
                cols.push(format!("theo_ratio_{t}"));
            }
        }
        Rows::Regret(_) => {
            cols.extend(["regret_td", "regret_mc", "approx_td", "approx_mc"].map(String::from));
        }
    }
    cols.push("redraws".into());
    cols
}

fn push_interval(cells: &mut Vec<String>, i: &super::Interval) {
    cells.extend([i.estimate, i.lo, i.hi].map(format_f64));
}

fn csv(rows: &Rows) -> String {
    let mut out = header(rows).join(",");
    out.push('\n');
    let mut line = |cells: Vec<String>| {
        out.push_str(&cells.join(","));
        out.push('\n');
    };
    match rows {
        Rows::Sweep(rs) => {
            for r in rs {
                let mut cells = vec![r.sweep_var.to_string()];
                for i in r.td.iter().chain(&r.mc) {
                    push_interval(&mut cells, i);
                }
                cells.extend(r.theo_td.iter().chain(&r.theo_mc).map(|&x| format_f64(x)));
                cells.push(r.redraws.to_string());
                line(cells);
            }
        }
        Rows::Ratio(rs) => {
            for r in rs {
                let mut cells = vec![r.sweep_var.to_string()];
                for i in &r.ratio {
                    push_interval(&mut cells, i);
                }
                cells.extend(r.theo_ratio.map(format_f64));
                cells.push(r.redraws.to_string());
                line(cells);
            }
        }
        Rows::Regret(rs) => {
            for r in rs {
                let mut cells = vec![r.n.to_string()];
                cells.extend([r.regret_td, r.regret_mc, r.approx_td, r.approx_mc].map(format_f64));
                cells.push(r.redraws.to_string());
                line(cells);
            }
        }
    }
    out
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a ExperimentConfig,
    columns: Vec<String>,
    interval: IntervalInfo,
    redraws: RedrawInfo,
}

#[derive(Serialize)]
struct IntervalInfo {
    method: &'static str,
    z: f64,
}

#[derive(Serialize)]
struct RedrawInfo {
    policy: &'static str,
    max_per_replication: u64,
    flag_fraction: f64,
    total: usize,
    flagged_rows: Vec<usize>,
}

impl ExperimentOutput {
    pub(crate) fn new(cfg: &ExperimentConfig, rows: Rows) -> Self {
        let total = match &rows {
            Rows::Sweep(r) => r.iter().map(|x| x.redraws).sum(),
            Rows::Ratio(r) => r.iter().map(|x| x.redraws).sum(),
            Rows::Regret(r) => r.iter().map(|x| x.redraws).sum(),
        };
        let interval = match rows {
            Rows::Ratio(_) => "delta-method normal interval on the ratio of mean squared errors",
            _ => "normal interval on squared errors: mean +- z * sd / sqrt(K)",
        };
        let sidecar = Sidecar {
            config: cfg,
            columns: header(&rows),
            interval: IntervalInfo {
                method: interval,
                z: Z_95,
            },
            redraws: RedrawInfo {
                policy: "replications that miss a target state are redrawn from a fresh derived seed",
                max_per_replication: MAX_REDRAWS,
                flag_fraction: REDRAW_FLAG_FRACTION,
                total,
                flagged_rows: rows.flagged(),
            },
        };
        let mut sidecar = serde_json::to_string_pretty(&sidecar).expect("config serializes");
        sidecar.push('\n');
        Self {
            csv: csv(&rows),
            sidecar,
            rows,
        }
    }
}
