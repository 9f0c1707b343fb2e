//! Perturbation of `M` by at most one unit into `L(M | M != d)`.

use rand::Rng;

use super::coefficients::StepCoefficients;
use crate::error::{Error, Result};
use crate::lattice::{GappedPmf, LatticePmf};

/// `X = Z Z+ - (1 - Z) Z-` with `Z ~ Bern(q)`, `Z+ ~ Bern(pi_M^(d))` and
/// `Z- ~ Bern(rho_M^(d))`.
#[derive(Debug, Clone)]
pub struct NePerturbation {
    pmf: LatticePmf,
    d: i64,
    q: f64,
    pi: StepCoefficients,
    rho: StepCoefficients,
}

impl NePerturbation {
    /// Requires an LC pmf with `P(M = d) < 1`.
    pub fn new(pmf: &LatticePmf, d: i64) -> Result<Self> {
        if !pmf.is_log_concave() {
            return Err(Error::NotLogConcave);
        }
        let ne = pmf.prob_ne(d);
        if ne <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        let above = pmf.tail_ge(d + 1);
        let q = if above > 0.0 { (above / ne).min(1.0) } else { 0.0 };
        Ok(Self {
            pmf: pmf.clone(),
            d,
            q,
            pi: StepCoefficients::up_unchecked(pmf, d),
            rho: StepCoefficients::down_unchecked(pmf, d),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn pi(&self) -> &StepCoefficients {
        &self.pi
    }

    pub fn rho(&self) -> &StepCoefficients {
        &self.rho
    }

    pub fn pmf(&self) -> &LatticePmf {
        &self.pmf
    }

    pub fn threshold(&self) -> i64 {
        self.d
    }

    /// Draws `X` given `M = m`.
    pub fn shift<R: Rng + ?Sized>(&self, m: i64, rng: &mut R) -> i64 {
        if rng.gen::<f64>() < self.q {
            let pi = self.pi.get(m);
            if pi > 0.0 && rng.gen::<f64>() < pi {
                return 1;
            }
        } else {
            let rho = self.rho.get(m);
            if rho > 0.0 && rng.gen::<f64>() < rho {
                return -1;
            }
        }
        0
    }

    /// Draws `(M, X)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        let m = self.pmf.sample(rng);
        (m, self.shift(m, rng))
    }

    /// Exact law of `M + X`.
    pub fn exact_law(&self) -> Result<GappedPmf> {
        let lo = self.pmf.lo() - 1;
        let mut weights = vec![0.0; self.pmf.len() + 2];
        for (k, &p) in self.pmf.probs().iter().enumerate() {
            let x = self.pmf.lo() + k as i64;
            let up = self.q * self.pi.get(x);
            let down = (1.0 - self.q) * self.rho.get(x);
            let slot = (x - lo) as usize;
            weights[slot + 1] += p * up;
            weights[slot - 1] += p * down;
            weights[slot] += p * (1.0 - up - down);
        }
        GappedPmf::from_weights(lo, &weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bin(n: usize, p: f64) -> LatticePmf {
        LatticePmf::poisson_binomial(&vec![p; n]).unwrap()
    }

    #[test]
    fn fair_binomial_middle() {
        let pmf = bin(2, 0.5);
        let ne = NePerturbation::new(&pmf, 1).unwrap();
        assert!((ne.q() - 0.5).abs() < 1e-15);
        let law = ne.exact_law().unwrap();
        let target = pmf.conditional_ne(1).unwrap();
        assert!(law.max_abs_diff(&target) <= 1e-15);
        assert_eq!(law.pmf(1), 0.0);
    }

    #[test]
    fn below_threshold_never_moves_up() {
        let pmf = bin(4, 0.5);
        let ne = NePerturbation::new(&pmf, 2).unwrap();
        assert_eq!(ne.pi().get(0), 0.0);
        assert_eq!(ne.pi().get(1), 0.0);
        assert_eq!(ne.rho().get(3), 0.0);
        assert_eq!(ne.pi().get(2), 1.0);
    }

    #[test]
    fn threshold_off_support_is_identity() {
        let pmf = bin(3, 0.3);
        for d in [-2, -1, 4, 7] {
            let ne = NePerturbation::new(&pmf, d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64((d + 10) as u64);
            for m in 0..=3 {
                for _ in 0..20 {
                    assert_eq!(ne.shift(m, &mut rng), 0);
                }
            }
            assert!(ne.exact_law().unwrap().max_abs_diff(&pmf.clone().into()) <= 1e-15);
        }
    }

    #[test]
    fn degenerate_threshold_rejected() {
        assert_eq!(
            NePerturbation::new(&LatticePmf::point_mass(2), 2).err(),
            Some(Error::ZeroProbability)
        );
    }

    #[test]
    fn sampled_shift_is_bounded() {
        let pmf = bin(6, 0.45);
        let ne = NePerturbation::new(&pmf, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5000 {
            let (m, x) = ne.sample(&mut rng);
            assert!(x.abs() <= 1);
            assert_ne!(m + x, 3);
        }
    }
}
