//! All-at-once lift of `M` into `L(M | M >= d)`.
//!
//! Starting from `M_lo = M`, each step `M_{k+1} = M_k + X_k` uses
//! `X_k ~ Bern(pi^(k)_{M_k})`, so `M_k ~ L(M | M >= k)` for every `k` and
//! `A = M_d - M` lies in `[0, d - lo]`.

use rand::Rng;

use super::coefficients::StepCoefficients;
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

#[derive(Debug, Clone)]
pub struct ThresholdLift {
    pmf: LatticePmf,
    d: i64,
    /// Up coefficients for thresholds `lo, lo + 1, ..., d - 1`.
    steps: Vec<StepCoefficients>,
}

impl ThresholdLift {
    /// Requires an LC pmf and `d` in its support.
    pub fn new(pmf: &LatticePmf, d: i64) -> Result<Self> {
        if !pmf.is_log_concave() {
            return Err(Error::NotLogConcave);
        }
        if !pmf.contains(d) {
            return Err(pmf.outside(d));
        }
        let steps = (pmf.lo()..d)
            .map(|k| StepCoefficients::up_unchecked(pmf, k))
            .collect();
        Ok(Self {
            pmf: pmf.clone(),
            d,
            steps,
        })
    }

    pub fn pmf(&self) -> &LatticePmf {
        &self.pmf
    }

    pub fn threshold(&self) -> i64 {
        self.d
    }

    /// Runs the chain from a given starting value and returns `A`.
    pub fn lift_from<R: Rng + ?Sized>(&self, m: i64, rng: &mut R) -> i64 {
        let mut current = m;
        for step in &self.steps {
            let pi = step.get(current);
            if pi > 0.0 && rng.gen::<f64>() < pi {
                current += 1;
            }
        }
        current - m
    }

    /// Draws `(M, A)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        let m = self.pmf.sample(rng);
        (m, self.lift_from(m, rng))
    }

    /// Exact joint law of `(M, A)` as `(m, a, probability)` triples with positive mass.
    pub fn exact_joint(&self) -> Vec<(i64, i64, f64)> {
        let lo = self.pmf.lo();
        let n = self.pmf.len();
        let mut out = Vec::new();
        for (k, &p) in self.pmf.probs().iter().enumerate() {
            // distribution of the current chain value, indexed from lo
            let mut dist = vec![0.0; n];
            dist[k] = p;
            for step in &self.steps {
                let mut next = vec![0.0; n];
                for (j, &mass) in dist.iter().enumerate() {
                    if mass == 0.0 {
                        continue;
                    }
                    let pi = step.get(lo + j as i64);
                    next[j] += mass * (1.0 - pi);
                    if pi > 0.0 {
                        next[j + 1] += mass * pi;
                    }
                }
                dist = next;
            }
            for (j, &mass) in dist.iter().enumerate() {
                if mass > 0.0 {
                    out.push((lo + k as i64, j as i64 - k as i64, mass));
                }
            }
        }
        out
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

    fn law_of_sum(joint: &[(i64, i64, f64)], lo: i64, len: usize) -> Vec<f64> {
        let mut law = vec![0.0; len];
        for &(m, a, p) in joint {
            law[(m + a - lo) as usize] += p;
        }
        law
    }

    #[test]
    fn lift_at_lower_end_is_trivial() {
        let pmf = bin(4, 0.3);
        let lift = ThresholdLift::new(&pmf, 0).unwrap();
        assert!(lift.exact_joint().iter().all(|&(_, a, _)| a == 0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(lift.lift_from(2, &mut rng), 0);
    }

    #[test]
    fn lift_to_top_is_forced() {
        let pmf = bin(2, 0.5);
        let lift = ThresholdLift::new(&pmf, 2).unwrap();
        for (m, a, _) in lift.exact_joint() {
            assert_eq!(m + a, 2);
        }
    }

    #[test]
    fn lift_reaches_conditional() {
        let pmf = bin(3, 0.4);
        let lift = ThresholdLift::new(&pmf, 2).unwrap();
        let joint = lift.exact_joint();
        let law = law_of_sum(&joint, 0, 4);
        let target = pmf.conditional_ge(2).unwrap();
        for x in 0..4 {
            assert!((law[x as usize] - target.pmf(x)).abs() <= 1e-12);
        }
        assert!(joint.iter().all(|&(_, a, _)| (0..=2).contains(&a)));
    }

    #[test]
    fn sampled_lift_stays_in_range() {
        let pmf = bin(6, 0.2);
        let lift = ThresholdLift::new(&pmf, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let (m, a) = lift.sample(&mut rng);
            assert!(m + a >= 4 && (0..=4).contains(&a));
        }
    }

    #[test]
    fn lift_rejects_bad_threshold() {
        assert!(matches!(
            ThresholdLift::new(&bin(2, 0.5), 3),
            Err(Error::OutsideSupport { .. })
        ));
    }
}
