//! Command-line front end: argument parsing, file handling and exit codes.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid spec, 3 numerical
//! failure. Output files are written to a temporary file in the target
//! directory and renamed into place, so a failed run never leaves a partial
//! file behind.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mrplab::analysis::{
    mc_advantage_asymptotic_variance, mc_asymptotic_variance, pooling_coefficient,
    td_advantage_asymptotic_variance, td_asymptotic_variance,
};
use mrplab::coupling::{crossing_coupling, crossing_time_upper, DEFAULT_ATOM_CAP};
use mrplab::harness::{sidecar_path, ExperimentConfig, Harness};
use mrplab::mrp::io::{format_f64, from_json, to_json};
use mrplab::mrp::{gen_checkout, gen_layered, gen_meeting, sample_dataset};
use mrplab::{analyze, mc_estimate, td_estimate, Error, MrpSpec, RewardDist, TabularEstimate, Weighting};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID_SPEC: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mrplab", version, about = "Exact and sampled value estimation on Markov reward processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated spec as JSON.
    Generate(GenerateArgs),
    /// Exact values, visit probabilities and asymptotic variances.
    Analyze(AnalyzeArgs),
    /// Sample a dataset and report TD and MC estimates as CSV.
    Estimate(EstimateArgs),
    /// Trajectory crossing time of two states.
    Crossing(CrossingArgs),
    /// Run a replicated experiment and write its CSV table and sidecar.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Layered,
    Meeting,
    Checkout,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator family.
    #[arg(long, value_enum)]
    family: Family,
    /// States per layer (layered).
    #[arg(long, default_value_t = 5)]
    width: usize,
    /// Horizon T: trajectories have T - 1 non-terminal states (layered, meeting).
    #[arg(long, default_value_t = 120)]
    horizon: usize,
    /// Probability that a state gets a backward edge (layered).
    #[arg(long, default_value_t = 0.0)]
    p_back: f64,
    /// Generator seed (layered).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of disjoint heads (meeting).
    #[arg(long, default_value_t = 5)]
    branches: usize,
    /// Step H at which the heads merge; H = horizon means never (meeting).
    #[arg(long, default_value_t = 2)]
    meeting: usize,
    /// Standard deviation of the zero-mean Gaussian rewards (meeting).
    #[arg(long, default_value_t = 1.0)]
    reward_sd: f64,
    /// Comma-separated click probabilities, one per page (checkout).
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.1])]
    clicks: Vec<f64>,
    /// Probability that a checkout ends in a sale (checkout).
    #[arg(long, default_value_t = 0.2)]
    sale_prob: f64,
    /// Output file; standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Spec file.
    spec: PathBuf,
    /// States to report; all states if omitted. Repeatable.
    #[arg(long = "state")]
    states: Vec<String>,
    /// Also report the advantage V(S) - V(S') and its asymptotic variances.
    #[arg(long, num_args = 2, value_names = ["S", "S_PRIME"])]
    pair: Vec<String>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Output file; standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Td,
    Mc,
    Both,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Spec file.
    spec: PathBuf,
    /// Number of trajectories to sample.
    #[arg(long)]
    n: usize,
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimators to run.
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Output CSV file; standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["exact", "mc"])))]
struct CrossingArgs {
    /// Spec file.
    spec: PathBuf,
    /// First state s.
    #[arg(long)]
    from: String,
    /// Second state s'.
    #[arg(long)]
    to: String,
    /// Exact value from an optimal coupling; acyclic specs only.
    #[arg(long)]
    exact: bool,
    /// Upper bound from this many independently sampled trajectory pairs.
    #[arg(long, value_name = "PAIRS")]
    mc: Option<usize>,
    /// Seed for --mc.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest number of trajectories enumerated per state for --exact.
    #[arg(long, default_value_t = DEFAULT_ATOM_CAP)]
    cap: usize,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config (JSON with the fields of an experiment config).
    #[arg(long)]
    config: PathBuf,
    /// Override `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `replications`.
    #[arg(long)]
    replications: Option<usize>,
    /// Override `n`.
    #[arg(long)]
    n: Option<usize>,
    /// Override `width`.
    #[arg(long)]
    width: Option<usize>,
    /// Override `horizon`.
    #[arg(long)]
    horizon: Option<usize>,
    /// Override `back_prob`.
    #[arg(long)]
    p_back: Option<f64>,
    /// Override `branches`.
    #[arg(long)]
    branches: Option<usize>,
    /// Override the target states.
    #[arg(long, num_args = 2, value_names = ["S", "S_PRIME"])]
    states: Vec<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "MRPLAB_THREADS")]
    threads: Option<usize>,
    /// Output CSV; overrides `output`. The sidecar goes next to it as
    /// `<name>.meta.json`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn invalid_spec(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID_SPEC,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidSpec(_) => EXIT_INVALID_SPEC,
            e if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// The full argument definition, for help output and introspection.
pub fn command() -> clap::Command {
    use clap::CommandFactory;
    Cli::command()
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Estimate(a) => estimate(a),
        Command::Crossing(a) => crossing(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_spec(path: &Path) -> Result<MrpSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let spec = from_json(&text).map_err(|e| Failure::invalid_spec(format!("{}: {e}", path.display())))?;
    spec.validated()
        .map_err(|e| Failure::invalid_spec(format!("{}: {e}", path.display())))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, or to standard output when no path is given.
fn emit(path: Option<&Path>, contents: &str) -> CmdResult {
    match path {
        None => {
            std::io::stdout()
                .write_all(contents.as_bytes())
                .map_err(|e| Failure::usage(format!("cannot write to standard output: {e}")))
        }
        Some(path) => write_atomic(path, contents),
    }
}

fn write_atomic(path: &Path, contents: &str) -> CmdResult {
    let fail = |e: std::io::Error| Failure::usage(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn generate(a: GenerateArgs) -> CmdResult {
    let spec = match a.family {
        Family::Layered => gen_layered(a.width, a.horizon, a.p_back, a.seed)?,
        Family::Meeting => gen_meeting(a.branches, a.meeting, a.horizon, RewardDist::gaussian(0.0, a.reward_sd))?,
        Family::Checkout => gen_checkout(&a.clicks, a.sale_prob)?,
    };
    let spec = spec.validated()?;
    emit(a.output.as_deref(), &to_json(&spec))?;
    if let Some(path) = &a.output {
        eprintln!("wrote {} states to {}", spec.num_states(), path.display());
    }
    Ok(())
}

/// Non-finite numbers become `null` in JSON and empty cells in CSV.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct StateRow {
    state: String,
    value: f64,
    visit_prob: f64,
    expected_horizon: f64,
    one_step_var: f64,
    pooling: f64,
    pooling_degenerate: bool,
    mc_var: Option<f64>,
    td_var: Option<f64>,
}

#[derive(Serialize)]
struct PairRow {
    s: String,
    s_prime: String,
    advantage: f64,
    td_var: f64,
    mc_var: f64,
}

#[derive(Serialize)]
struct AnalyzeJson {
    states: Vec<StateRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pair: Option<PairRow>,
}

fn analyze_cmd(a: AnalyzeArgs) -> CmdResult {
    let spec = load_spec(&a.spec)?;
    let report = analyze(&spec)?;
    let states: Vec<usize> = if a.states.is_empty() {
        (0..spec.num_states()).collect()
    } else {
        a.states.iter().map(|n| spec.index_of(n)).collect::<Result<_, _>>()?
    };
    let mut rows = Vec::with_capacity(states.len());
    for &s in &states {
        let c = pooling_coefficient(&report, s)?;
        let reached = report.visit_prob[s] > 0.0;
        rows.push(StateRow {
            state: spec.name(s).to_string(),
            value: report.values[s],
            visit_prob: report.visit_prob[s],
            expected_horizon: report.expected_horizon[s],
            one_step_var: report.one_step_var[s],
            pooling: c.value,
            pooling_degenerate: c.degenerate,
            mc_var: reached.then(|| mc_asymptotic_variance(&report, s)).and_then(finite),
            td_var: if reached {
                finite(td_asymptotic_variance(&report, &Weighting::point(s))?)
            } else {
                None
            },
        });
    }
    let pair = match a.pair.as_slice() {
        [x, y] => {
            let (s, sp) = (spec.index_of(x)?, spec.index_of(y)?);
            Some(PairRow {
                s: x.clone(),
                s_prime: y.clone(),
                advantage: report.values[s] - report.values[sp],
                td_var: td_advantage_asymptotic_variance(&report, s, sp)?,
                mc_var: mc_advantage_asymptotic_variance(&spec, &report, s, sp)?,
            })
        }
        _ => None,
    };
    let text = match a.format {
        Format::Text => analyze_text(&rows, pair.as_ref()),
        Format::Csv => analyze_csv(&rows),
        Format::Json => {
            let mut t = serde_json::to_string_pretty(&AnalyzeJson { states: rows, pair })
                .map_err(|e| Failure::usage(e.to_string()))?;
            t.push('\n');
            t
        }
    };
    emit(a.output.as_deref(), &text)
}

fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn analyze_text(rows: &[StateRow], pair: Option<&PairRow>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>12} {:>10} {:>10} {:>12} {:>12}",
        "state", "V", "P(visit)", "C", "MC var", "TD var"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>12.6} {:>10.6} {:>10.6} {:>12} {:>12}",
            r.state,
            r.value,
            r.visit_prob,
            r.pooling,
            opt(r.mc_var, |x| format!("{x:.6}")),
            opt(r.td_var, |x| format!("{x:.6}")),
        );
    }
    if let Some(p) = pair {
        let _ = writeln!(
            out,
            "\nadvantage V({}) - V({}) = {:.6}\n  TD asymptotic variance {:.6}\n  MC asymptotic variance {:.6}",
            p.s, p.s_prime, p.advantage, p.td_var, p.mc_var
        );
    }
    out
}

fn analyze_csv(rows: &[StateRow]) -> String {
    let mut out = String::from(
        "state,value,visit_prob,expected_horizon,one_step_var,pooling,pooling_degenerate,mc_var,td_var\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.state,
            format_f64(r.value),
            format_f64(r.visit_prob),
            format_f64(r.expected_horizon),
            format_f64(r.one_step_var),
            format_f64(r.pooling),
            r.pooling_degenerate,
            opt(r.mc_var, format_f64),
            opt(r.td_var, format_f64),
        );
    }
    out
}

fn estimate(a: EstimateArgs) -> CmdResult {
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let spec = load_spec(&a.spec)?;
    let data = sample_dataset(&spec, a.n, a.seed)?;
    let mut estimates: Vec<TabularEstimate> = Vec::new();
    if matches!(a.method, MethodArg::Td | MethodArg::Both) {
        estimates.push(td_estimate(&data, &spec)?);
    }
    if matches!(a.method, MethodArg::Mc | MethodArg::Both) {
        estimates.push(mc_estimate(&data, &spec));
    }
    let mut out = String::from("state,method,estimate,count\n");
    for s in 0..spec.num_states() {
        for est in &estimates {
            let value = est.value(s).map(format_f64).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", spec.name(s), est.method, value, est.count(s));
        }
    }
    emit(a.output.as_deref(), &out)
}

fn crossing(a: CrossingArgs) -> CmdResult {
    let spec = load_spec(&a.spec)?;
    let (s, sp) = (spec.index_of(&a.from)?, spec.index_of(&a.to)?);
    if a.exact {
        let c = crossing_coupling(&spec, s, sp, a.cap).map_err(|e| {
            let hint = match e {
                Error::Cyclic(_) => "; use --mc PAIRS for a Monte-Carlo upper bound",
                Error::EnumerationCapExceeded { .. } => "; raise --cap or use --mc PAIRS for a Monte-Carlo upper bound",
                _ => "",
            };
            let mut f = Failure::from(e);
            f.message.push_str(hint);
            f
        })?;
        println!("H({}, {}) = {}", a.from, a.to, format_f64(c.crossing_time()));
        println!(
            "optimal plan: {} cells over {} x {} trajectories, {} pivots",
            c.result.plan.len(),
            c.from_s.len(),
            c.from_s_prime.len(),
            c.result.pivots
        );
    } else {
        let pairs = a.mc.expect("argument group requires one mode");
        let (mean, se) = crossing_time_upper(&spec, s, sp, pairs, a.seed)?;
        println!("H({}, {}) <= {}", a.from, a.to, format_f64(mean));
        println!("standard error {} over {pairs} independent pairs", format_f64(se));
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", a.config.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    if let Some(x) = a.seed {
        cfg.seed = x;
    }
    if let Some(x) = a.replications {
        cfg.replications = x;
    }
    if let Some(x) = a.n {
        cfg.n = Some(x);
    }
    if let Some(x) = a.width {
        cfg.width = x;
    }
    if let Some(x) = a.horizon {
        cfg.horizon = Some(x);
    }
    if let Some(x) = a.p_back {
        cfg.back_prob = Some(x);
    }
    if let Some(x) = a.branches {
        cfg.branches = x;
    }
    if let [x, y] = a.states.as_slice() {
        cfg.states = Some((x.clone(), y.clone()));
    }
    if let Some(path) = &a.output {
        cfg.output = Some(path.to_string_lossy().into_owned());
    }
    let Some(output) = cfg.output.clone().map(PathBuf::from) else {
        return Err(Failure::usage("no output path: pass -o or set `output` in the config"));
    };
    cfg.validate()?;
    let out = Harness::new(a.threads)?.run(&cfg)?;
    let sidecar = sidecar_path(&output);
    write_atomic(&output, &out.csv)?;
    write_atomic(&sidecar, &out.sidecar)?;
    eprintln!(
        "wrote {} rows to {} and metadata to {}",
        out.rows.len(),
        output.display(),
        sidecar.display()
    );
    Ok(())
}
