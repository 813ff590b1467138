use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Reserved name of the absorbing terminal state. It never appears in
/// [`MrpSpec::names`]; it is only valid as the target of a transition.
pub const TERMINAL: &str = "__terminal__";

const PROB_TOLERANCE: f64 = 1e-12;

/// Reward attached to a transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RewardDist {
    Constant { value: f64 },
    /// Uniform on `[mean - half_width, mean + half_width]`.
    Uniform { mean: f64, half_width: f64 },
    Gaussian { mean: f64, sd: f64 },
}

impl RewardDist {
    pub fn constant(value: f64) -> Self {
        RewardDist::Constant { value }
    }

    pub fn uniform(mean: f64, half_width: f64) -> Self {
        RewardDist::Uniform { mean, half_width }
    }

    pub fn gaussian(mean: f64, sd: f64) -> Self {
        RewardDist::Gaussian { mean, sd }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RewardDist::Constant { value } => value,
            RewardDist::Uniform { mean, .. } | RewardDist::Gaussian { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            RewardDist::Constant { .. } => 0.0,
            RewardDist::Uniform { half_width, .. } => half_width * half_width / 3.0,
            RewardDist::Gaussian { sd, .. } => sd * sd,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RewardDist::Constant { value } => value,
            RewardDist::Uniform { mean, half_width } => {
                mean + half_width * (2.0 * rng.random::<f64>() - 1.0)
            }
            RewardDist::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }

    fn parameters_valid(&self) -> bool {
        match *self {
            RewardDist::Constant { value } => value.is_finite(),
            RewardDist::Uniform { mean, half_width } => {
                mean.is_finite() && half_width.is_finite() && half_width >= 0.0
            }
            RewardDist::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Successor {
    State(usize),
    Terminal,
}

impl Successor {
    pub fn state(self) -> Option<usize> {
        match self {
            Successor::State(s) => Some(s),
            Successor::Terminal => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub to: Successor,
    pub prob: f64,
    pub reward: RewardDist,
}

/// A terminating Markov reward process: states, per-state outgoing edges
/// with reward distributions, and an initial distribution.
///
/// Construction only checks structure (names resolve, no duplicates). The
/// probabilistic assumptions are checked by [`MrpSpec::validate`], so an
/// invalid model can still be built and inspected.
#[derive(Clone, Debug)]
pub struct MrpSpec {
    names: Arc<[String]>,
    index: HashMap<String, usize>,
    edges: Vec<Vec<Edge>>,
    initial: Vec<(usize, f64)>,
    // sampling tables: cumulative edge probabilities per state
    cumulative: Vec<Vec<f64>>,
    initial_cumulative: Vec<f64>,
}

impl MrpSpec {
    pub fn builder() -> MrpSpecBuilder {
        MrpSpecBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &Arc<[String]> {
        &self.names
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn successor_name(&self, to: Successor) -> &str {
        match to {
            Successor::State(s) => &self.names[s],
            Successor::Terminal => TERMINAL,
        }
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn edges(&self, s: usize) -> &[Edge] {
        &self.edges[s]
    }

    pub fn initial(&self) -> &[(usize, f64)] {
        &self.initial
    }

    /// Initial distribution as a dense vector over states.
    pub fn initial_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.num_states()];
        for &(s, p) in &self.initial {
            d[s] += p;
        }
        d
    }

    /// Edge from `from` to `to`, if declared. Parallel edges are merged at
    /// construction, so there is at most one.
    pub fn edge(&self, from: usize, to: Successor) -> Option<&Edge> {
        self.edges[from].iter().find(|e| e.to == to)
    }

    pub(crate) fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = pick(&self.initial_cumulative, rng.random::<f64>());
        self.initial[i].0
    }

    pub(crate) fn sample_edge<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> &Edge {
        let i = pick(&self.cumulative[s], rng.random::<f64>());
        &self.edges[s][i]
    }

    /// Checks every probabilistic assumption the analysis relies on.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.num_states();

        for s in 0..n {
            let mut sum = 0.0;
            for e in &self.edges[s] {
                if !(0.0..=1.0).contains(&e.prob) || !e.prob.is_finite() {
                    violations.push(Violation::new(Some(s), Rule::ProbabilityRange, self));
                }
                if !e.reward.parameters_valid() {
                    violations.push(Violation::new(Some(s), Rule::RewardParameters, self));
                }
                sum += e.prob;
            }
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                violations.push(Violation::new(Some(s), Rule::RowSum, self));
            }
        }

        let mut init_sum = 0.0;
        for &(s, p) in &self.initial {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                violations.push(Violation::new(Some(s), Rule::ProbabilityRange, self));
            }
            init_sum += p;
        }
        if (init_sum - 1.0).abs() > PROB_TOLERANCE {
            violations.push(Violation::new(None, Rule::InitialSum, self));
        }

        // backwards search from the terminal over positive-probability edges
        let mut reaches_terminal = vec![false; n];
        let mut predecessors = vec![Vec::new(); n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            for e in self.edges[s].iter().filter(|e| e.prob > 0.0) {
                match e.to {
                    Successor::Terminal => {
                        if !reaches_terminal[s] {
                            reaches_terminal[s] = true;
                            queue.push_back(s);
                        }
                    }
                    Successor::State(t) => predecessors[t].push(s),
                }
            }
        }
        while let Some(t) = queue.pop_front() {
            for &s in &predecessors[t] {
                if !reaches_terminal[s] {
                    reaches_terminal[s] = true;
                    queue.push_back(s);
                }
            }
        }

        let mut reached = vec![false; n];
        for &(s, p) in &self.initial {
            if p > 0.0 && !reached[s] {
                reached[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for e in self.edges[s].iter().filter(|e| e.prob > 0.0) {
                if let Successor::State(t) = e.to {
                    if !reached[t] {
                        reached[t] = true;
                        queue.push_back(t);
                    }
                }
            }
        }

        for s in 0..n {
            if !reaches_terminal[s] {
                violations.push(Violation::new(Some(s), Rule::TerminalUnreachable, self));
            }
            if !reached[s] {
                violations.push(Violation::new(Some(s), Rule::NeverVisited, self));
            }
        }

        ValidationReport { violations }
    }

    /// Returns the spec unchanged if valid, otherwise the full report.
    pub fn validated(self) -> Result<Self> {
        let report = self.validate();
        if report.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidSpec(report))
        }
    }

    /// True when no positive-probability cycle exists among non-terminal
    /// states.
    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// A state lying on a positive-probability cycle, if any.
    pub fn find_cycle(&self) -> Option<usize> {
        let n = self.num_states();
        let mut indegree = vec![0usize; n];
        for s in 0..n {
            for e in self.edges[s].iter().filter(|e| e.prob > 0.0) {
                if let Successor::State(t) = e.to {
                    indegree[t] += 1;
                }
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&s| indegree[s] == 0).collect();
        let mut removed = 0;
        while let Some(s) = stack.pop() {
            removed += 1;
            for e in self.edges[s].iter().filter(|e| e.prob > 0.0) {
                if let Successor::State(t) = e.to {
                    indegree[t] -= 1;
                    if indegree[t] == 0 {
                        stack.push(t);
                    }
                }
            }
        }
        if removed == n {
            None
        } else {
            (0..n).find(|&s| indegree[s] > 0)
        }
    }
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    // u in [0, 1); the last slot absorbs any round-off in the table
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

/// Incremental constructor addressing states by name.
#[derive(Clone, Debug, Default)]
pub struct MrpSpecBuilder {
    states: Vec<String>,
    edges: Vec<(String, String, f64, RewardDist)>,
    initial: Vec<(String, f64)>,
}

impl MrpSpecBuilder {
    pub fn state(mut self, name: impl Into<String>) -> Self {
        self.states.push(name.into());
        self
    }

    pub fn states<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.states.extend(names.into_iter().map(Into::into));
        self
    }

    /// `to` may be [`TERMINAL`].
    pub fn edge(
        mut self,
        from: impl Into<String>,
        to: impl Into<String>,
        prob: f64,
        reward: RewardDist,
    ) -> Self {
        self.edges.push((from.into(), to.into(), prob, reward));
        self
    }

    pub fn initial(mut self, state: impl Into<String>, prob: f64) -> Self {
        self.initial.push((state.into(), prob));
        self
    }

    pub fn push_state(&mut self, name: impl Into<String>) {
        self.states.push(name.into());
    }

    pub fn push_edge(
        &mut self,
        from: impl Into<String>,
        to: impl Into<String>,
        prob: f64,
        reward: RewardDist,
    ) {
        self.edges.push((from.into(), to.into(), prob, reward));
    }

    pub fn push_initial(&mut self, state: impl Into<String>, prob: f64) {
        self.initial.push((state.into(), prob));
    }

    pub fn build(self) -> Result<MrpSpec> {
        let mut index = HashMap::with_capacity(self.states.len());
        for (i, name) in self.states.iter().enumerate() {
            if name == TERMINAL {
                return Err(Error::ReservedName(name.clone()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateState(name.clone()));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownState(name.to_string()))
        };

        let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); self.states.len()];
        for (from, to, prob, reward) in self.edges {
            let s = lookup(&from)?;
            let to = if to == TERMINAL {
                Successor::Terminal
            } else {
                Successor::State(lookup(&to)?)
            };
            if edges[s].iter().any(|e| e.to == to) {
                return Err(Error::Format(format!(
                    "duplicate transition from `{from}` to `{}`",
                    if to == Successor::Terminal { TERMINAL } else { &self.states[to.state().unwrap()] }
                )));
            }
            edges[s].push(Edge { to, prob, reward });
        }

        let mut initial = Vec::with_capacity(self.initial.len());
        for (name, p) in self.initial {
            if name == TERMINAL {
                return Err(Error::ReservedName(name));
            }
            initial.push((lookup(&name)?, p));
        }

        let cumulative = edges
            .iter()
            .map(|row| running_sum(row.iter().map(|e| e.prob)))
            .collect();
        let initial_cumulative = running_sum(initial.iter().map(|&(_, p)| p));

        Ok(MrpSpec {
            names: self.states.into(),
            index,
            edges,
            initial,
            cumulative,
            initial_cumulative,
        })
    }
}

fn running_sum(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    it.map(|p| {
        acc += p.max(0.0);
        acc
    })
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    RowSum,
    TerminalUnreachable,
    NeverVisited,
    InitialSum,
    ProbabilityRange,
    RewardParameters,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::RowSum => "row-sum",
            Rule::TerminalUnreachable => "terminal-unreachable",
            Rule::NeverVisited => "never-visited",
            Rule::InitialSum => "initial-sum",
            Rule::ProbabilityRange => "probability-range",
            Rule::RewardParameters => "reward-parameters",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub state: Option<String>,
    pub rule: Rule,
}

impl Violation {
    fn new(state: Option<usize>, rule: Rule, spec: &MrpSpec) -> Self {
        Self {
            state: state.map(|s| spec.name(s).to_string()),
            rule,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.state {
            Some(s) => write!(f, "{}: state `{s}`", self.rule),
            None => write!(f, "{}: initial distribution", self.rule),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}
