//! Step-up and step-down coefficients and the exact one-step laws they induce.

use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Which way a one-step coupling moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// The coefficients `pi_x^(d)` (up) or `rho_x^(d)` (down) for a fixed `d`,
/// tabulated over the support of the underlying pmf. Off the support every
/// coefficient is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCoefficients {
    direction: Direction,
    d: i64,
    lo: i64,
    values: Vec<f64>,
}

fn ensure_lc(pmf: &LatticePmf) -> Result<()> {
    if pmf.is_log_concave() {
        Ok(())
    } else {
        Err(Error::NotLogConcave)
    }
}

fn clamp_unit(v: f64) -> f64 {
    debug_assert!(
        (-1e-12..=1.0 + 1e-12).contains(&v),
        "step coefficient {v} outside [0, 1]"
    );
    v.clamp(0.0, 1.0)
}

/// Up coefficients without the log-concavity check.
fn up_values(pmf: &LatticePmf, d: i64) -> Vec<f64> {
    let n = pmf.len();
    let mut values = vec![0.0; n];
    if !pmf.contains(d + 1) || !pmf.contains(d) {
        // d + 1 in the support but d below it: P(M = d) = 0, all coefficients vanish.
        return values;
    }
    let tails = pmf.upper_tails();
    let probs = pmf.probs();
    let kd = (d - pmf.lo()) as usize;
    let p_d = probs[kd];
    let g_d1 = tails[kd + 1];
    for k in kd..n {
        let g_next = if k + 1 < n { tails[k + 1] } else { 0.0 };
        values[k] = clamp_unit(g_next * p_d / (g_d1 * probs[k]));
    }
    values
}

impl StepCoefficients {
    /// Tabulates `pi_x^(d)` for every `x` in the support.
    pub fn up(pmf: &LatticePmf, d: i64) -> Result<Self> {
        ensure_lc(pmf)?;
        Ok(Self::up_unchecked(pmf, d))
    }

    pub(crate) fn up_unchecked(pmf: &LatticePmf, d: i64) -> Self {
        Self {
            direction: Direction::Up,
            d,
            lo: pmf.lo(),
            values: up_values(pmf, d),
        }
    }

    /// Tabulates `rho_x^(d)`, obtained from the up coefficients of `-M` at `-d`.
    pub fn down(pmf: &LatticePmf, d: i64) -> Result<Self> {
        ensure_lc(pmf)?;
        Ok(Self::down_unchecked(pmf, d))
    }

    pub(crate) fn down_unchecked(pmf: &LatticePmf, d: i64) -> Self {
        let mut values = up_values(&pmf.reflect(), -d);
        values.reverse();
        Self {
            direction: Direction::Down,
            d,
            lo: pmf.lo(),
            values,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn threshold(&self) -> i64 {
        self.d
    }

    /// The coefficient at `x`; zero off the support.
    pub fn get(&self, x: i64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        self.values.get((x - self.lo) as usize).copied().unwrap_or(0.0)
    }
}

/// `pi_x^(d)` for an LC pmf.
pub fn pi_coeff(pmf: &LatticePmf, d: i64, x: i64) -> Result<f64> {
    Ok(StepCoefficients::up(pmf, d)?.get(x))
}

/// `rho_x^(d)` for an LC pmf.
pub fn rho_coeff(pmf: &LatticePmf, d: i64, x: i64) -> Result<f64> {
    Ok(StepCoefficients::down(pmf, d)?.get(x))
}

/// Exact law of `N + Z` with `N ~ L(M | M >= d)` and `Z | N ~ Bern(pi_N^(d))`.
///
/// Requires `d + 1` in the support; the result equals `L(M | M >= d + 1)`.
pub fn step_up_law(pmf: &LatticePmf, d: i64) -> Result<LatticePmf> {
    if !pmf.contains(d + 1) {
        return Err(pmf.outside(d + 1));
    }
    let coeffs = StepCoefficients::up(pmf, d)?;
    let base = pmf.conditional_ge(d)?;
    let mut weights = vec![0.0; base.len() + 1];
    for (k, &p) in base.probs().iter().enumerate() {
        let x = base.lo() + k as i64;
        let pi = coeffs.get(x);
        weights[k] += p * (1.0 - pi);
        weights[k + 1] += p * pi;
    }
    LatticePmf::from_weights(base.lo(), &weights)
}

/// Exact law of `N - Z` with `N ~ L(M | M <= d)` and `Z | N ~ Bern(rho_N^(d))`.
///
/// Requires `d - 1` in the support; the result equals `L(M | M <= d - 1)`.
pub fn step_down_law(pmf: &LatticePmf, d: i64) -> Result<LatticePmf> {
    if !pmf.contains(d - 1) {
        return Err(pmf.outside(d - 1));
    }
    let coeffs = StepCoefficients::down(pmf, d)?;
    let base = pmf.conditional_le(d)?;
    let mut weights = vec![0.0; base.len() + 1];
    for (k, &p) in base.probs().iter().enumerate() {
        let x = base.lo() + k as i64;
        let rho = coeffs.get(x);
        weights[k + 1] += p * (1.0 - rho);
        weights[k] += p * rho;
    }
    LatticePmf::from_weights(base.lo() - 1, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::max_abs_diff;
    use approx::assert_abs_diff_eq;

    fn bin(n: usize, p: f64) -> LatticePmf {
        LatticePmf::poisson_binomial(&vec![p; n]).unwrap()
    }

    #[test]
    fn pi_examples() {
        let pmf = bin(2, 0.5);
        assert_abs_diff_eq!(pi_coeff(&pmf, 0, 0).unwrap(), 1.0, epsilon = 1e-15);
        // G_2 p_0 / (G_1 p_1) = 0.25 * 0.25 / (0.75 * 0.5)
        assert_abs_diff_eq!(pi_coeff(&pmf, 0, 1).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(pi_coeff(&pmf, 0, 2).unwrap(), 0.0);
        assert_eq!(pi_coeff(&pmf, 1, 0).unwrap(), 0.0);
        assert_eq!(pi_coeff(&pmf, 2, 2).unwrap(), 0.0);
    }

    #[test]
    fn rho_examples() {
        let pmf = bin(2, 0.5);
        assert_abs_diff_eq!(rho_coeff(&pmf, 2, 2).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho_coeff(&pmf, 2, 1).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert_eq!(rho_coeff(&pmf, 2, 0).unwrap(), 0.0);
        assert_eq!(rho_coeff(&pmf, 1, 2).unwrap(), 0.0);
    }

    #[test]
    fn coefficients_reject_non_lc() {
        let pmf = LatticePmf::new(0, vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(pi_coeff(&pmf, 0, 0), Err(Error::NotLogConcave));
        assert_eq!(rho_coeff(&pmf, 2, 2), Err(Error::NotLogConcave));
    }

    #[test]
    fn step_up_examples() {
        let pmf = bin(2, 0.5);
        let law = step_up_law(&pmf, 0).unwrap();
        assert_eq!(law.lo(), 1);
        assert_abs_diff_eq!(law.pmf(1), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(law.pmf(2), 1.0 / 3.0, epsilon = 1e-15);

        let top = step_up_law(&pmf, 1).unwrap();
        assert_eq!(top, LatticePmf::point_mass(2));

        let b3 = bin(3, 0.3);
        let diff = max_abs_diff(&step_up_law(&b3, 1).unwrap(), &b3.conditional_ge(2).unwrap());
        assert!(diff <= 1e-15, "{diff}");
        assert!(step_up_law(&b3, 3).is_err());
    }

    #[test]
    fn step_down_matches_conditional() {
        let pmf = bin(5, 0.35);
        for d in 1..=5 {
            let law = step_down_law(&pmf, d).unwrap();
            let target = pmf.conditional_le(d - 1).unwrap();
            assert!(max_abs_diff(&law, &target) <= 1e-14);
        }
        assert!(step_down_law(&pmf, 0).is_err());
    }

    #[test]
    fn out_of_support_thresholds_vanish() {
        let pmf = bin(3, 0.4);
        let up = StepCoefficients::up(&pmf, -3).unwrap();
        assert!((0..=3).all(|x| up.get(x) == 0.0));
        let down = StepCoefficients::down(&pmf, 7).unwrap();
        assert!((0..=3).all(|x| down.get(x) == 0.0));
        assert_eq!(up.direction(), Direction::Up);
        assert_eq!(down.threshold(), 7);
    }
}
