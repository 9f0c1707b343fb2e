//! Independent Bernoulli vectors conditioned on their sum.

use rand::Rng;

use crate::error::{Error, Result};

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exact sampler for `L(X | sum X = a)` with `X_j ~ Bern(p_j)` independent.
///
/// The backward table holds `ln P(X_j + ... + X_{m-1} = r)` for `r <= a`.
#[derive(Debug, Clone)]
pub struct ConditionalBernoulli {
    ln_p: Vec<f64>,
    ln_q: Vec<f64>,
    a: usize,
    /// Row `j` has `a + 1` entries; `m + 1` rows.
    table: Vec<f64>,
}

impl ConditionalBernoulli {
    pub fn new(p: &[f64], a: usize) -> Result<Self> {
        if let Some(&bad) = p.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
            return Err(Error::invalid(format!(
                "success probability {bad} is not in the open interval (0, 1)"
            )));
        }
        let m = p.len();
        if a > m {
            return Err(Error::invalid(format!("conditioning sum {a} exceeds length {m}")));
        }
        let ln_p: Vec<f64> = p.iter().map(|q| q.ln()).collect();
        let ln_q: Vec<f64> = p.iter().map(|q| (-q).ln_1p()).collect();
        let w = a + 1;
        let mut table = vec![f64::NEG_INFINITY; (m + 1) * w];
        table[m * w] = 0.0;
        for j in (0..m).rev() {
            for r in 0..w {
                let stay = ln_q[j] + table[(j + 1) * w + r];
                let take = if r > 0 {
                    ln_p[j] + table[(j + 1) * w + r - 1]
                } else {
                    f64::NEG_INFINITY
                };
                table[j * w + r] = log_add(stay, take);
            }
        }
        Ok(Self { ln_p, ln_q, a, table })
    }

    pub fn len(&self) -> usize {
        self.ln_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_p.is_empty()
    }

    pub fn sum(&self) -> usize {
        self.a
    }

    fn ln_tail(&self, j: usize, r: usize) -> f64 {
        self.table[j * (self.a + 1) + r]
    }

    /// `ln P(sum X = a)`.
    pub fn ln_normalizer(&self) -> f64 {
        self.ln_tail(0, self.a)
    }

    /// Conditional probability of a given 0/1 vector.
    pub fn probability(&self, x: &[bool]) -> f64 {
        if x.len() != self.len() || x.iter().filter(|&&b| b).count() != self.a {
            return 0.0;
        }
        let ln: f64 = x
            .iter()
            .enumerate()
            .map(|(j, &b)| if b { self.ln_p[j] } else { self.ln_q[j] })
            .sum();
        (ln - self.ln_normalizer()).exp()
    }

    /// Marginal inclusion probabilities `P(X_j = 1 | sum X = a)`.
    pub fn inclusion_probabilities(&self) -> Vec<f64> {
        // forward table of ln P(X_0 + ... + X_{j-1} = r)
        let m = self.len();
        let w = self.a + 1;
        let mut fwd = vec![f64::NEG_INFINITY; (m + 1) * w];
        fwd[0] = 0.0;
        for j in 0..m {
            for r in 0..w {
                let stay = self.ln_q[j] + fwd[j * w + r];
                let take = if r > 0 {
                    self.ln_p[j] + fwd[j * w + r - 1]
                } else {
                    f64::NEG_INFINITY
                };
                fwd[(j + 1) * w + r] = log_add(stay, take);
            }
        }
        let norm = self.ln_normalizer();
        (0..m)
            .map(|j| {
                let mut acc = f64::NEG_INFINITY;
                for r in 0..self.a {
                    acc = log_add(acc, fwd[j * w + r] + self.ln_tail(j + 1, self.a - 1 - r));
                }
                (self.ln_p[j] + acc - norm).exp()
            })
            .collect()
    }

    /// Draws one vector, deciding coordinates in order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let m = self.len();
        let mut out = vec![false; m];
        let mut r = self.a;
        for (j, slot) in out.iter_mut().enumerate() {
            if r == 0 {
                break;
            }
            if m - j == r {
                *slot = true;
                r -= 1;
                continue;
            }
            let take = (self.ln_p[j] + self.ln_tail(j + 1, r - 1) - self.ln_tail(j, r)).exp();
            if rng.gen::<f64>() < take {
                *slot = true;
                r -= 1;
            }
        }
        out
    }

    /// Exact law over all vectors with the conditioned sum, as bit masks
    /// (coordinate `j` is bit `j`). Only for `m <= 24`.
    pub fn exact_law(&self) -> Result<Vec<(u64, f64)>> {
        let m = self.len();
        if m > 24 {
            return Err(Error::EnumerationTooLarge {
                count: 2f64.powi(m as i32),
                limit: 2f64.powi(24),
            });
        }
        let norm = self.ln_normalizer();
        Ok(level_masks(m, self.a)
            .into_iter()
            .map(|mask| {
                let ln: f64 = (0..m)
                    .map(|j| if mask >> j & 1 == 1 { self.ln_p[j] } else { self.ln_q[j] })
                    .sum();
                (mask, (ln - norm).exp())
            })
            .collect())
    }
}

/// All `m`-bit masks with exactly `a` set bits, ascending.
pub(crate) fn level_masks(m: usize, a: usize) -> Vec<u64> {
    (0u64..1 << m).filter(|x| x.count_ones() as usize == a).collect()
}
