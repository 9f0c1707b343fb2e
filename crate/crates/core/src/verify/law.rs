//! Finite discrete laws: exact oracles and their empirical counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{merge_atoms, ModelSpec, StatisticKind, ATOM_TOLERANCE};

/// Atoms `(value, probability)` sorted by value, with values closer than
/// `1e-9` (relative above one) merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    atoms: Vec<(f64, f64)>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ATOM_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

impl DiscreteLaw {
    /// Normalizes nonnegative masses; atoms need not be sorted or distinct.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(y, p)| !y.is_finite() || !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("atoms must have finite values and nonnegative masses"));
        }
        let atoms = merge_atoms(atoms);
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0) {
            return Err(Error::invalid("a law needs positive total mass"));
        }
        Ok(Self {
            atoms: atoms.into_iter().map(|(y, p)| (y, p / total)).collect(),
        })
    }

    pub fn point_mass(y: f64) -> Self {
        Self { atoms: vec![(y, 1.0)] }
    }

    /// Empirical law of a sample.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&y| (y, 1.0)).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(y, p)| y * p).sum()
    }

    /// Probability of the atom at `y`, matched within the merge tolerance.
    pub fn prob(&self, y: f64) -> f64 {
        self.atoms.iter().filter(|a| close(a.0, y)).map(|a| a.1).sum()
    }

    /// The law of `Y + s`.
    pub fn shift(&self, s: f64) -> Self {
        Self {
            atoms: merge_atoms(self.atoms.iter().map(|&(y, p)| (y + s, p)).collect()),
        }
    }

    /// Total-variation distance, matching atoms within the merge tolerance.
    pub fn total_variation(&self, other: &DiscreteLaw) -> f64 {
        let (a, b) = (&self.atoms, &other.atoms);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.len() || j < b.len() {
            if i < a.len() && j < b.len() && close(a[i].0, b[j].0) {
                sum += (a[i].1 - b[j].1).abs();
                i += 1;
                j += 1;
            } else if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
                sum += a[i].1;
                i += 1;
            } else {
                sum += b[j].1;
                j += 1;
            }
        }
        sum / 2.0
    }
}

/// `P(Y^s = y) = y P(Y = y) / EY`.
pub fn exact_size_bias_law(law: &DiscreteLaw) -> Result<DiscreteLaw> {
    if law.atoms.iter().any(|a| a.0 < 0.0) {
        return Err(Error::invalid("size biasing needs a nonnegative variable"));
    }
    let mu = law.mean();
    if !(mu > 0.0) {
        return Err(Error::invalid("size biasing needs a positive mean"));
    }
    Ok(DiscreteLaw {
        atoms: law
            .atoms
            .iter()
            .filter(|a| a.0 > 0.0)
            .map(|&(y, p)| (y, y * p / mu))
            .collect(),
    })
}

/// Exact law of the full statistic by enumerating every configuration.
pub fn brute_force_law(model: &ModelSpec, kind: StatisticKind) -> Result<DiscreteLaw> {
    DiscreteLaw::new(model.enumerate_law(kind)?)
}
