//! Transportation simplex (MODI) for couplings of two finite distributions.
//!
//! Degeneracy is removed with the classical perturbation: every supply gets
//! `+eps` and the last demand `+m * eps`, which keeps every basic flow
//! strictly positive. Flows are tracked symbolically as `a + b * eps` and
//! compared lexicographically, so `eps` never takes a numeric value. The
//! entering cell is chosen by Bland's rule. Once optimal, flows are
//! recomputed on the final basis from the unperturbed marginals.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Tolerance on the marginal sums.
pub const MARGINAL_TOL: f64 = 1e-12;
/// Largest accepted problem, in cells.
pub const MAX_CELLS: usize = 25_000_000;
/// Real parts this small are treated as exact zeros.
const ZERO_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct TransportProblem {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
    /// `cost[i][j]` for moving mass from supply `i` to demand `j`.
    pub cost: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingResult {
    pub optimal_cost: f64,
    /// Cells with positive mass as `(i, j, mass)`.
    pub plan: Vec<(usize, usize, f64)>,
    /// Dual potentials: `u[i] + v[j] <= cost[i][j]` with equality on the plan.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub pivots: usize,
}

impl TransportProblem {
    pub fn new(supply: Vec<f64>, demand: Vec<f64>, cost: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self {
            supply,
            demand,
            cost,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleMarginals(msg));
        let (m, n) = (self.supply.len(), self.demand.len());
        if m == 0 || n == 0 {
            return bad("empty marginal".into());
        }
        for (name, xs) in [("supply", &self.supply), ("demand", &self.demand)] {
            if let Some(x) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return bad(format!("{name} entry {x} is not a probability"));
            }
            let total: f64 = xs.iter().sum();
            if (total - 1.0).abs() > MARGINAL_TOL {
                return bad(format!("{name} sums to {total:.17}"));
            }
        }
        if m.saturating_mul(n) > MAX_CELLS {
            return Err(Error::ProblemTooLarge {
                cells: m.saturating_mul(n),
                limit: MAX_CELLS,
            });
        }
        if self.cost.len() != m || self.cost.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter(format!("cost matrix must be {m}x{n}")));
        }
        if self.cost.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("cost matrix has a non-finite entry".into()));
        }
        Ok(())
    }

    /// Cost of the product coupling.
    pub fn independent_cost(&self) -> f64 {
        self.supply
            .iter()
            .zip(&self.cost)
            .map(|(a, row)| a * row.iter().zip(&self.demand).map(|(c, b)| c * b).sum::<f64>())
            .sum()
    }
}

impl CouplingResult {
    /// Checks primal feasibility, dual feasibility, complementary slackness
    /// and equality of the primal and dual objectives, each to `tol`.
    pub fn certify(&self, p: &TransportProblem, tol: f64) -> std::result::Result<(), String> {
        let mut rows = vec![0.0; p.supply.len()];
        let mut cols = vec![0.0; p.demand.len()];
        for &(i, j, x) in &self.plan {
            if x < 0.0 {
                return Err(format!("negative mass {x} at ({i}, {j})"));
            }
            rows[i] += x;
            cols[j] += x;
            let slack = p.cost[i][j] - self.u[i] - self.v[j];
            if slack.abs() > tol {
                return Err(format!("complementary slackness fails at ({i}, {j}): {slack:e}"));
            }
        }
        for (got, want) in rows.iter().zip(&p.supply).chain(cols.iter().zip(&p.demand)) {
            if (got - want).abs() > tol {
                return Err(format!("marginal {got} differs from {want}"));
            }
        }
        for (i, row) in p.cost.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c - self.u[i] - self.v[j] < -tol {
                    return Err(format!("dual infeasible at ({i}, {j})"));
                }
            }
        }
        let dual: f64 = p.supply.iter().zip(&self.u).map(|(a, u)| a * u).sum::<f64>()
            + p.demand.iter().zip(&self.v).map(|(b, v)| b * v).sum::<f64>();
        if (dual - self.optimal_cost).abs() > tol * (1.0 + self.optimal_cost.abs()) {
            return Err(format!("duality gap: primal {} dual {dual}", self.optimal_cost));
        }
        Ok(())
    }
}

/// `a + b * eps` for an infinitesimal `eps > 0`.
#[derive(Clone, Copy, Debug)]
struct Lex {
    a: f64,
    b: i64,
}

impl Lex {
    const ZERO: Lex = Lex { a: 0.0, b: 0 };

    fn sub(self, o: Lex) -> Lex {
        Lex {
            a: self.a - o.a,
            b: self.b - o.b,
        }
        .snap()
    }

    fn add(self, o: Lex) -> Lex {
        Lex {
            a: self.a + o.a,
            b: self.b + o.b,
        }
        .snap()
    }

    fn snap(self) -> Lex {
        if self.a.abs() <= ZERO_TOL {
            Lex { a: 0.0, b: self.b }
        } else {
            self
        }
    }

    fn cmp(self, o: Lex) -> Ordering {
        if (self.a - o.a).abs() > ZERO_TOL {
            self.a.total_cmp(&o.a)
        } else {
            self.b.cmp(&o.b)
        }
    }
}

fn lex_min(x: Lex, y: Lex) -> Lex {
    if x.cmp(y) == Ordering::Greater {
        y
    } else {
        x
    }
}

struct Tableau<'a> {
    p: &'a TransportProblem,
    m: usize,
    n: usize,
    basis: Vec<(usize, usize)>,
    flow: Vec<Lex>,
}

impl<'a> Tableau<'a> {
    fn northwest(p: &'a TransportProblem) -> Self {
        let (m, n) = (p.supply.len(), p.demand.len());
        let mut rs: Vec<Lex> = p.supply.iter().map(|&a| Lex { a, b: 1 }).collect();
        let mut cd: Vec<Lex> = p.demand.iter().map(|&a| Lex { a, b: 0 }).collect();
        cd[n - 1].b += m as i64;
        let mut basis = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = lex_min(rs[i], cd[j]);
            basis.push((i, j));
            flow.push(x);
            rs[i] = rs[i].sub(x);
            cd[j] = cd[j].sub(x);
            if i == m - 1 && j == n - 1 {
                break;
            }
            let row_done = rs[i].cmp(Lex::ZERO) != Ordering::Greater;
            if j == n - 1 || (i < m - 1 && row_done) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self {
            p,
            m,
            n,
            basis,
            flow,
        }
    }

    /// Adjacency of the basis tree; rows are nodes `0..m`, columns `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.basis.iter().enumerate() {
            adj[i].push(k);
            adj[self.m + j].push(k);
        }
        adj
    }

    fn other_end(&self, k: usize, node: usize) -> usize {
        let (i, j) = self.basis[k];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    fn duals(&self, adj: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
        let mut pot = vec![f64::NAN; self.m + self.n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &k in &adj[node] {
                let next = self.other_end(k, node);
                if pot[next].is_nan() {
                    let (i, j) = self.basis[k];
                    pot[next] = self.p.cost[i][j] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Basis cells on the tree path from column `j` to row `i`.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let start = self.m + j;
        let mut via = vec![usize::MAX; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &k in &adj[node] {
                let next = self.other_end(k, node);
                if !seen[next] {
                    seen[next] = true;
                    via[next] = k;
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = i;
        while node != start {
            let k = via[node];
            cells.push(k);
            node = self.other_end(k, node);
        }
        cells.reverse();
        cells
    }

    /// Flows on the current basis for the unperturbed marginals, by peeling
    /// leaves off the basis tree.
    fn exact_flows(&self, adj: &[Vec<usize>]) -> Vec<f64> {
        let mut rem: Vec<f64> = self.p.supply.iter().chain(&self.p.demand).copied().collect();
        let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        let mut done = vec![false; self.basis.len()];
        let mut flows = vec![0.0; self.basis.len()];
        let mut leaves: Vec<usize> = (0..degree.len()).filter(|&v| degree[v] == 1).collect();
        while let Some(node) = leaves.pop() {
            if degree[node] != 1 {
                continue;
            }
            let k = *adj[node].iter().find(|&&k| !done[k]).expect("leaf has one live cell");
            let x = rem[node];
            flows[k] = x.max(0.0);
            done[k] = true;
            let other = self.other_end(k, node);
            rem[other] -= x;
            degree[node] = 0;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
        }
        flows
    }
}

pub fn solve_transportation(p: &TransportProblem) -> Result<CouplingResult> {
    p.validate()?;
    let mut t = Tableau::northwest(p);
    let (m, n) = (t.m, t.n);
    let cmax = p.cost.iter().flatten().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-10 * (1.0 + cmax);
    let cap = 1000 + 20 * m * n;
    let mut pivots = 0;

    loop {
        let adj = t.adjacency();
        let (u, v) = t.duals(&adj);

        // Bland: first improving cell in row-major order
        let entering = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| p.cost[i][j] - u[i] - v[j] < -tol);

        let Some((i, j)) = entering else {
            let flows = t.exact_flows(&adj);
            let plan: Vec<(usize, usize, f64)> = t
                .basis
                .iter()
                .zip(&flows)
                .filter(|(_, &x)| x > 0.0)
                .map(|(&(i, j), &x)| (i, j, x))
                .collect();
            let optimal_cost = plan.iter().map(|&(i, j, x)| x * p.cost[i][j]).sum();
            return Ok(CouplingResult {
                optimal_cost,
                plan,
                u,
                v,
                pivots,
            });
        };

        pivots += 1;
        if pivots > cap {
            return Err(Error::SolverStalled(cap));
        }

        let cycle = t.path(&adj, i, j);
        // odd positions along the path lose mass
        let leaving = cycle
            .iter()
            .step_by(2)
            .copied()
            .min_by(|&a, &b| {
                t.flow[a].cmp(t.flow[b]).then_with(|| {
                    let key = |k: usize| t.basis[k].0 * n + t.basis[k].1;
                    key(a).cmp(&key(b))
                })
            })
            .expect("cycle has a losing cell");
        let theta = t.flow[leaving];
        for (pos, &k) in cycle.iter().enumerate() {
            t.flow[k] = if pos % 2 == 0 {
                t.flow[k].sub(theta)
            } else {
                t.flow[k].add(theta)
            };
        }
        t.basis[leaving] = (i, j);
        t.flow[leaving] = theta;
    }
}
