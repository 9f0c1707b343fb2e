//! Finite lattice distributions on integer intervals.
//!
//! [`LatticePmf`] stores a probability mass function whose support is exactly
//! the stored interval `{lo, ..., lo + len - 1}`: both end atoms are strictly
//! positive. Conditioning on `{M != d}` can open an interior gap, so those
//! laws come back as a [`GappedPmf`] instead, which keeps the log-concavity
//! precondition of the coupling code enforced by type.

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on the total mass accepted by the checked constructors.
const MASS_TOLERANCE: f64 = 1e-9;

/// Relative slack in the log-concavity inequality.
const LC_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Log relative weight below which hypergeometric tail atoms are discarded.
const HYPERGEOMETRIC_LOG_FLOOR: f64 = -700.0;

/// A probability mass function on the integer interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    lo: i64,
    probs: Vec<f64>,
}

/// A probability mass function on `[lo, hi]` that may vanish at interior points.
#[derive(Debug, Clone, PartialEq)]
pub struct GappedPmf {
    lo: i64,
    probs: Vec<f64>,
}

fn check_entries(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::invalid("probability vector is empty"));
    }
    let mut total = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::invalid(format!("probability {p} is negative or not finite")));
        }
        total += p;
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(total)
}

/// Trims zero end atoms, returning the new lower end and the interior slice.
fn trim(lo: i64, weights: &[f64]) -> Option<(i64, &[f64])> {
    let first = weights.iter().position(|&w| w > 0.0)?;
    let last = weights.iter().rposition(|&w| w > 0.0)?;
    Some((lo + first as i64, &weights[first..=last]))
}

impl LatticePmf {
    /// Builds a pmf from explicit probabilities starting at `lo`.
    ///
    /// The probabilities must be nonnegative, sum to one (within `1e-9`, after
    /// which they are renormalized) and have strictly positive end atoms.
    pub fn new(lo: i64, probs: Vec<f64>) -> Result<Self> {
        let total = check_entries(&probs)?;
        if probs[0] <= 0.0 || probs[probs.len() - 1] <= 0.0 {
            return Err(Error::invalid("end atoms of a lattice pmf must be strictly positive"));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self { lo, probs })
    }

    /// Normalizes nonnegative weights, trimming zero atoms at either end.
    pub(crate) fn from_weights(lo: i64, weights: &[f64]) -> Result<Self> {
        let (lo, slice) = trim(lo, weights).ok_or(Error::ZeroProbability)?;
        let total: f64 = slice.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroProbability);
        }
        Ok(Self {
            lo,
            probs: slice.iter().map(|w| w / total).collect(),
        })
    }

    pub fn point_mass(k: i64) -> Self {
        Self { lo: k, probs: vec![1.0] }
    }

    /// Law of a sum of independent Bernoulli variables with the given success
    /// probabilities, by the one-dimensional convolution recurrence.
    ///
    /// Every probability must lie strictly inside `(0, 1)`; constant summands
    /// are the caller's to strip.
    pub fn poisson_binomial(p: &[f64]) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("Poisson Binomial needs at least one component"));
        }
        if let Some(&bad) = p.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
            return Err(Error::invalid(format!(
                "success probability {bad} is not in the open interval (0, 1)"
            )));
        }
        let mut probs = Vec::with_capacity(p.len() + 1);
        probs.push(1.0);
        for &q in p {
            probs.push(0.0);
            for k in (1..probs.len()).rev() {
                probs[k] = probs[k] * (1.0 - q) + probs[k - 1] * q;
            }
            probs[0] *= 1.0 - q;
        }
        Self::from_weights(0, &probs)
    }

    /// Hypergeometric law of the number of balls of one color, occurring
    /// `color` times in a population of `population`, in a uniform sample of
    /// size `sample` drawn without replacement.
    ///
    /// The pmf is accumulated from consecutive-atom ratios in log space.
    pub fn hypergeometric(color: u64, sample: u64, population: u64) -> Result<Self> {
        if color > population || sample > population {
            return Err(Error::invalid(format!(
                "hypergeometric parameters out of range: color={color}, sample={sample}, population={population}"
            )));
        }
        let lo = (sample + color).saturating_sub(population);
        let hi = sample.min(color);
        let mut log_w = Vec::with_capacity((hi - lo + 1) as usize);
        let mut acc = 0.0f64;
        log_w.push(0.0);
        for j in lo..hi {
            let (k, l, i, jf) = (color as f64, sample as f64, population as f64, j as f64);
            acc += ((k - jf) * (l - jf)).ln() - ((jf + 1.0) * (i - k - l + jf + 1.0)).ln();
            log_w.push(acc);
        }
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Atoms below the normal floating range are dropped rather than kept subnormal.
        let weights: Vec<f64> = log_w
            .iter()
            .map(|w| if w - max < HYPERGEOMETRIC_LOG_FLOOR { 0.0 } else { (w - max).exp() })
            .collect();
        Self::from_weights(lo as i64, &weights)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.lo && x <= self.hi()
    }

    /// `P(M = x)`, zero off the support.
    pub fn pmf(&self, x: i64) -> f64 {
        if self.contains(x) {
            self.probs[(x - self.lo) as usize]
        } else {
            0.0
        }
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (self.lo + k as i64) as f64 * p)
            .sum()
    }

    /// Upper tails `P(M >= x)` for every `x` in the support, by backward accumulation.
    pub fn upper_tails(&self) -> Vec<f64> {
        let mut tails = vec![0.0; self.probs.len()];
        let mut acc = 0.0;
        for k in (0..self.probs.len()).rev() {
            acc += self.probs[k];
            tails[k] = acc;
        }
        tails
    }

    /// Lower tails `P(M <= x)` for every `x` in the support.
    pub fn lower_tails(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// `P(M >= d)`; `d` may lie anywhere.
    pub fn tail_ge(&self, d: i64) -> f64 {
        if d <= self.lo {
            1.0
        } else if d > self.hi() {
            0.0
        } else {
            self.probs[(d - self.lo) as usize..].iter().rev().sum()
        }
    }

    /// `P(M <= d)`; `d` may lie anywhere.
    pub fn tail_le(&self, d: i64) -> f64 {
        if d >= self.hi() {
            1.0
        } else if d < self.lo {
            0.0
        } else {
            self.probs[..=(d - self.lo) as usize].iter().sum()
        }
    }

    /// `P(M != d)`.
    pub fn prob_ne(&self, d: i64) -> f64 {
        1.0 - self.pmf(d)
    }

    /// True when the support is an integer interval and `p_x^2 >= p_{x-1} p_{x+1}`
    /// at every interior point, up to a relative slack of `1e-12 p_x^2`.
    pub fn is_log_concave(&self) -> bool {
        if self.probs.iter().any(|&p| p <= 0.0) {
            return false;
        }
        // p_{x-1} p_{x+1} <= (1 + eps) p_x^2, compared in logs to survive tiny atoms
        let slack = LC_RELATIVE_TOLERANCE.ln_1p();
        self.probs
            .windows(3)
            .all(|w| w[0].ln() + w[2].ln() <= 2.0 * w[1].ln() + slack)
    }

    /// Hazard `h_x = P(M = x) / P(M >= x)` at a support point.
    pub fn hazard(&self, x: i64) -> Result<f64> {
        if !self.contains(x) {
            return Err(self.outside(x));
        }
        let k = (x - self.lo) as usize;
        let tail: f64 = self.probs[k..].iter().rev().sum();
        Ok(self.probs[k] / tail)
    }

    /// Law of `M` given `M >= d`.
    pub fn conditional_ge(&self, d: i64) -> Result<Self> {
        if d <= self.lo {
            return Ok(self.clone());
        }
        if d > self.hi() {
            return Err(Error::ZeroProbability);
        }
        Self::from_weights(d, &self.probs[(d - self.lo) as usize..])
    }

    /// Law of `M` given `M <= d`.
    pub fn conditional_le(&self, d: i64) -> Result<Self> {
        if d >= self.hi() {
            return Ok(self.clone());
        }
        if d < self.lo {
            return Err(Error::ZeroProbability);
        }
        Self::from_weights(self.lo, &self.probs[..=(d - self.lo) as usize])
    }

    /// Law of `M` given `M != d`; the result may have an interior gap.
    pub fn conditional_ne(&self, d: i64) -> Result<GappedPmf> {
        let mut weights = self.probs.clone();
        if self.contains(d) {
            weights[(d - self.lo) as usize] = 0.0;
        }
        GappedPmf::from_weights(self.lo, &weights)
    }

    /// Law of `-M`.
    pub fn reflect(&self) -> Self {
        Self {
            lo: -self.hi(),
            probs: self.probs.iter().rev().cloned().collect(),
        }
    }

    /// Draws one value by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.lo + k as i64;
            }
        }
        self.hi()
    }

    pub(crate) fn outside(&self, x: i64) -> Error {
        Error::OutsideSupport {
            x,
            lo: self.lo,
            hi: self.hi(),
        }
    }
}

impl GappedPmf {
    pub fn new(lo: i64, probs: Vec<f64>) -> Result<Self> {
        let total = check_entries(&probs)?;
        Ok(Self {
            lo,
            probs: probs.into_iter().map(|p| p / total).collect(),
        })
    }

    pub(crate) fn from_weights(lo: i64, weights: &[f64]) -> Result<Self> {
        let (lo, slice) = trim(lo, weights).ok_or(Error::ZeroProbability)?;
        let total: f64 = slice.iter().sum();
        Ok(Self {
            lo,
            probs: slice.iter().map(|w| w / total).collect(),
        })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self, x: i64) -> f64 {
        if x >= self.lo && x <= self.hi() {
            self.probs[(x - self.lo) as usize]
        } else {
            0.0
        }
    }

    /// Largest atomwise difference against another gapped law.
    pub fn max_abs_diff(&self, other: &GappedPmf) -> f64 {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        (lo..=hi)
            .map(|x| (self.pmf(x) - other.pmf(x)).abs())
            .fold(0.0, f64::max)
    }
}

impl From<LatticePmf> for GappedPmf {
    fn from(pmf: LatticePmf) -> Self {
        GappedPmf {
            lo: pmf.lo,
            probs: pmf.probs,
        }
    }
}

/// Largest atomwise difference between two lattice laws.
pub fn max_abs_diff(a: &LatticePmf, b: &LatticePmf) -> f64 {
    let lo = a.lo().min(b.lo());
    let hi = a.hi().max(b.hi());
    (lo..=hi)
        .map(|x| (a.pmf(x) - b.pmf(x)).abs())
        .fold(0.0, f64::max)
}
