//! Generic size-bias engine: choose an urn, draw its count and the lifted level.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::StatisticKind;
use crate::couplings::{MonotoneChain, NePerturbation, ThresholdLift};
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Moves a count into `L(M | M >= d)` or `L(M | M != d)`.
#[derive(Debug, Clone)]
pub(crate) enum UrnLift {
    Ge(ThresholdLift),
    Ne(NePerturbation),
}

impl UrnLift {
    pub fn new(pmf: &LatticePmf, d: i64, kind: StatisticKind) -> Result<Self> {
        Ok(match kind {
            StatisticKind::Ge => UrnLift::Ge(ThresholdLift::new(pmf, d)?),
            StatisticKind::Ne => UrnLift::Ne(NePerturbation::new(pmf, d)?),
        })
    }

    /// `(N, N + A)` with `N` from the marginal.
    pub fn levels<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        match self {
            UrnLift::Ge(l) => {
                let (m, a) = l.sample(rng);
                (m, m + a)
            }
            UrnLift::Ne(p) => {
                let (m, x) = p.sample(rng);
                (m, m + x)
            }
        }
    }
}

/// Index `I` with `P(I = i)` proportional to `w_i P(indicator_i)`, plus the lift of each index.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    lifts: Vec<UrnLift>,
    index: Option<WeightedIndex<f64>>,
    total: f64,
}

impl Engine {
    /// `urns` holds `(marginal, threshold, weight)` of each candidate index.
    pub fn new<'a>(urns: impl IntoIterator<Item = (&'a LatticePmf, i64, f64)>, kind: StatisticKind) -> Result<Self> {
        let mut lifts = Vec::new();
        let mut masses = Vec::new();
        for (pmf, d, w) in urns {
            masses.push(w * kind.probability(pmf, d));
            lifts.push(UrnLift::new(pmf, d, kind)?);
        }
        Self::from_parts(lifts, masses)
    }

    pub fn from_parts(lifts: Vec<UrnLift>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if lifts.is_empty() || !(total > 0.0) {
            return Err(Error::invalid(
                "statistic is almost surely constant; there is nothing to size bias",
            ));
        }
        let index = if masses.len() > 1 {
            Some(WeightedIndex::new(&masses).map_err(|e| Error::Internal(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { lifts, index, total })
    }

    /// Mean of the statistic over the candidate indices.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `(slot, N, N + A)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, i64, i64) {
        let slot = match &self.index {
            Some(w) => w.sample(rng),
            None => 0,
        };
        let (n, t) = self.lifts[slot].levels(rng);
        (slot, n, t)
    }
}

/// `(X_base, X_target)` from one draw of the chain; `target` may lie below `base`.
pub(crate) fn chain_pair<R: Rng + ?Sized>(
    chain: &MonotoneChain,
    base: i64,
    target: i64,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<bool>)> {
    if base < 0 || target < 0 {
        return Err(Error::Internal(format!("negative chain level ({base}, {target})")));
    }
    if target >= base {
        chain.segment(base as usize, target as usize, rng)
    } else {
        let (lo, hi) = chain.segment(target as usize, base as usize, rng)?;
        Ok((hi, lo))
    }
}
