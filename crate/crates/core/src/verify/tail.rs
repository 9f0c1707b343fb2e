//! Empirical tail probabilities with Wilson score intervals.

use serde::{Deserialize, Serialize};

use crate::bounds::Side;
use crate::error::{Error, Result};

/// Standard-normal quantile used for every interval in the audits.
pub const WILSON_Z: f64 = 4.0;

/// An empirical frequency with the distance from it down to the Wilson lower limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub probability: f64,
    pub halfwidth: f64,
}

/// `p_hat - lower` of the Wilson score interval for `k` successes in `n` trials.
pub fn wilson_halfwidth(k: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (p - (center - half).max(0.0)).max(0.0)
}

/// Sorted sample for tail queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    sorted: Vec<f64>,
}

impl EmpiricalTail {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("no samples"));
        }
        if samples.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn count_ge(&self, x: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&y| y < x)
    }

    pub fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&y| y <= x)
    }

    pub fn fraction_ge(&self, x: f64) -> f64 {
        self.count_ge(x) as f64 / self.len() as f64
    }

    pub fn fraction_le(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.len() as f64
    }

    /// `P(Y - mu >= t)` (right) or `P(Y - mu <= -t)` (left), with `mu` known
    /// only to within `mu_error`; the event is widened accordingly.
    pub fn tail(&self, mu: f64, mu_error: f64, t: f64, side: Side) -> TailEstimate {
        let k = match side {
            Side::Right => self.count_ge(mu + t - mu_error),
            Side::Left => self.count_le(mu - t + mu_error),
        };
        TailEstimate {
            probability: k as f64 / self.len() as f64,
            halfwidth: wilson_halfwidth(k, self.len(), WILSON_Z),
        }
    }
}
