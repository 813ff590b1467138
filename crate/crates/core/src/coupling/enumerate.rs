use crate::error::{Error, Result};
use crate::mrp::{MrpSpec, Successor};

/// Default limit on the number of trajectories enumerated from one state.
pub const DEFAULT_ATOM_CAP: usize = 100_000;

/// One complete trajectory and its probability. `path` ends with a single
/// [`Successor::Terminal`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryAtom {
    pub path: Vec<Successor>,
    pub prob: f64,
}

/// Every trajectory started at `s`, sorted by path. Only acyclic specs have
/// finitely many.
pub fn enumerate_trajectories(spec: &MrpSpec, s: usize, cap: usize) -> Result<Vec<TrajectoryAtom>> {
    if s >= spec.num_states() {
        return Err(Error::UnknownState(format!("#{s}")));
    }
    if let Some(c) = spec.find_cycle() {
        return Err(Error::Cyclic(spec.name(c).to_string()));
    }
    let mut atoms = Vec::new();
    // (state, depth, prob of the prefix ending here)
    let mut stack = vec![(s, 0usize, 1.0f64)];
    let mut prefix: Vec<Successor> = Vec::new();
    while let Some((x, depth, prob)) = stack.pop() {
        prefix.truncate(depth);
        prefix.push(Successor::State(x));
        for e in spec.edges(x).iter().filter(|e| e.prob > 0.0) {
            match e.to {
                Successor::State(y) => stack.push((y, depth + 1, prob * e.prob)),
                Successor::Terminal => {
                    let mut path = prefix.clone();
                    path.push(Successor::Terminal);
                    atoms.push(TrajectoryAtom {
                        path,
                        prob: prob * e.prob,
                    });
                    if atoms.len() > cap {
                        return Err(Error::EnumerationCapExceeded {
                            state: spec.name(s).to_string(),
                            cap,
                        });
                    }
                }
            }
        }
    }
    atoms.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(atoms)
}
