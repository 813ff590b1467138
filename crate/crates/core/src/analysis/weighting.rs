use super::AnalysisReport;
use crate::error::{Error, Result};
use crate::mrp::MrpSpec;

/// Signed weights over states. A value estimate under weighting `w` is
/// `sum_s w(s) V(s)`; a single state, an advantage `V(s) - V(s')` and the
/// start-state value are the common cases.
#[derive(Clone, Debug, PartialEq)]
pub struct Weighting {
    entries: Vec<(usize, f64)>,
}

impl Weighting {
    /// Merges repeated states and drops zero weights.
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        if let Some(&(_, w)) = entries.iter().find(|(_, w)| !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite weight {w}")));
        }
        entries.sort_by_key(|&(s, _)| s);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (s, w) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == s => *acc += w,
                _ => merged.push((s, w)),
            }
        }
        merged.retain(|&(_, w)| w != 0.0);
        if merged.is_empty() {
            return Err(Error::EmptyWeighting);
        }
        Ok(Self { entries: merged })
    }

    pub fn point(s: usize) -> Self {
        Self {
            entries: vec![(s, 1.0)],
        }
    }

    /// `V(s) - V(s')`.
    pub fn advantage(s: usize, s_prime: usize) -> Result<Self> {
        Self::new([(s, 1.0), (s_prime, -1.0)])
    }

    /// The initial distribution, whose value is the expected return.
    pub fn initial(spec: &MrpSpec) -> Self {
        Self::new(spec.initial().iter().copied()).expect("initial distribution is nonempty")
    }

    pub fn from_names(spec: &MrpSpec, entries: &[(&str, f64)]) -> Result<Self> {
        let resolved = entries
            .iter()
            .map(|&(name, w)| Ok((spec.index_of(name)?, w)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(resolved)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        match self.entries.iter().find(|&&(s, _)| s >= n) {
            Some(&(s, _)) => Err(Error::UnknownState(format!("#{s}"))),
            None => Ok(()),
        }
    }
}

pub fn weighted_value(report: &AnalysisReport, w: &Weighting) -> Result<f64> {
    w.check(report.num_states())?;
    Ok(w.entries.iter().map(|&(s, x)| x * report.values[s]).sum())
}

/// `eta_w(s') = sum_s w(s) N[s][s']`.
pub fn weighted_occupancy(report: &AnalysisReport, w: &Weighting) -> Result<Vec<f64>> {
    w.check(report.num_states())?;
    let mut eta = vec![0.0; report.num_states()];
    for &(s, x) in &w.entries {
        for (acc, n) in eta.iter_mut().zip(report.occupancy.row(s)) {
            *acc += x * n;
        }
    }
    Ok(eta)
}
