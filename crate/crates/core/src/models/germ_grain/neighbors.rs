//! Weighted count of unit balls with at least (or other than) `d_a` neighbors.

use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;

use super::{ball_masses, grid_resolution, kappa1, sigma_d, unit_ball_volume, DensityGrid, MidpointGrid, Torus};
use crate::couplings::MonotoneChain;
use crate::models::config::GgNeighborsConfig;
use crate::models::engine::{chain_pair, Engine};
use crate::models::{check_weights, Configuration, CoupledSample, MeanEstimate, PairSampler, StatisticKind};
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Unit balls meet when their centers are at most this far apart.
const CONTACT: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct GgNeighbors {
    torus: Torus,
    densities: Vec<DensityGrid>,
    weights: Vec<f64>,
    thresholds: Vec<i64>,
    kappa1: usize,
    /// Midpoint grid for means under non-uniform densities.
    grid: Option<MidpointGrid>,
}

impl GgNeighbors {
    pub(crate) fn from_config(c: &GgNeighborsConfig) -> Result<Self> {
        let m = c.grains;
        Self::new(
            c.dimension,
            c.volume,
            &c.densities.expand(m, "densities")?,
            c.weights.expand(m, "weights")?,
            c.thresholds.expand(m, "thresholds")?,
            c.kappa1,
            c.resolution,
        )
    }

    pub fn new(
        dimension: usize,
        volume: f64,
        densities: &[super::Density],
        weights: Vec<f64>,
        thresholds: Vec<i64>,
        kappa: Option<usize>,
        resolution: Option<usize>,
    ) -> Result<Self> {
        let torus = Torus::new(dimension, volume)?;
        let m = weights.len();
        if m == 0 {
            return Err(Error::invalid("at least one ball is required"));
        }
        if densities.len() != m || thresholds.len() != m {
            return Err(Error::invalid("densities, weights and thresholds must have one entry per ball"));
        }
        check_weights(&weights)?;
        let side = torus.side();
        if !((dimension as f64).sqrt() * side > 2.0 * m as f64) {
            return Err(Error::invalid(format!(
                "torus too small: sqrt(p) * side = {} must exceed twice the number of balls {}",
                (dimension as f64).sqrt() * side,
                2 * m
            )));
        }
        if !(side > 6.0) {
            return Err(Error::invalid(format!("torus side {side} must exceed 6")));
        }
        let kappa1 = match (kappa1(dimension), kappa) {
            (Some(t), Some(k)) if t != k => {
                return Err(Error::invalid(format!("kappa1 is {t} in dimension {dimension}, not {k}")))
            }
            (Some(t), _) => t,
            (None, Some(k)) if k > 0 => k,
            (None, _) => {
                return Err(Error::invalid(format!(
                    "kappa1 is not tabulated in dimension {dimension}; supply it"
                )))
            }
        };
        let densities = densities
            .iter()
            .enumerate()
            .map(|(a, d)| DensityGrid::new(torus, d, &format!("density {a}")))
            .collect::<Result<Vec<_>>>()?;
        let grid = if densities.iter().all(|d| d.is_uniform()) {
            None
        } else {
            let base = densities.iter().map(|d| d.cells_per_axis()).fold(1, super::lcm);
            Some(MidpointGrid {
                torus,
                k: grid_resolution(dimension, resolution, base)?,
            })
        };
        Ok(Self {
            torus,
            densities,
            weights,
            thresholds,
            kappa1,
            grid,
        })
    }

    pub fn balls(&self) -> usize {
        self.weights.len()
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn kappa1(&self) -> usize {
        self.kappa1
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn is_uniform(&self) -> bool {
        self.grid.is_none()
    }

    /// `P(D(x, U) <= 2)` for a uniform germ.
    fn uniform_contact(&self) -> f64 {
        let p = self.torus.dim();
        unit_ball_volume(p) * CONTACT.powi(p as i32) / self.torus.volume()
    }

    /// Law of `M_a` given that ball `alpha` sits at `u`.
    pub fn marginal_pmf_at(&self, alpha: usize, u: &[f64]) -> Result<LatticePmf> {
        if alpha >= self.balls() {
            return Err(Error::invalid(format!("ball {alpha} out of range")));
        }
        if u.len() != self.torus.dim() {
            return Err(Error::invalid("location has the wrong dimension"));
        }
        let p: Vec<f64> = (0..self.balls())
            .filter(|&b| b != alpha)
            .map(|b| self.contact_at(b, u))
            .collect();
        LatticePmf::poisson_binomial(&p)
    }

    fn contact_at(&self, b: usize, u: &[f64]) -> f64 {
        let dens = &self.densities[b];
        match &self.grid {
            None => self.uniform_contact(),
            Some(_) if self.torus.dim() == 1 => dens.ball_mass_1d(u[0], CONTACT),
            Some(g) => {
                let mut m = 0.0;
                g.for_each_within(u, CONTACT, |c| m += dens.at(&g.point(c)));
                m * g.cell_volume()
            }
        }
    }

    /// Urns whose indicator is not almost surely constant; `M_a` ranges over `[0, m-1]`.
    fn active(&self, kind: StatisticKind) -> (Vec<usize>, f64) {
        let top = self.balls() as i64 - 1;
        let mut active = Vec::new();
        let mut offset = 0.0;
        for (a, &d) in self.thresholds.iter().enumerate() {
            let constant_one = match kind {
                StatisticKind::Ge => d <= 0,
                StatisticKind::Ne => d < 0 || d > top,
            };
            let constant_zero = match kind {
                StatisticKind::Ge => d > top,
                StatisticKind::Ne => top == 0 && d == 0,
            };
            if constant_one {
                offset += self.weights[a];
            } else if !constant_zero {
                active.push(a);
            }
        }
        (active, offset)
    }

    pub fn offset(&self, kind: StatisticKind) -> Result<f64> {
        Ok(self.active(kind).1)
    }

    fn quadrature(&self, grid: &MidpointGrid, kind: StatisticKind) -> Result<f64> {
        let m = self.balls();
        let contact = self
            .densities
            .iter()
            .map(|d| ball_masses(grid, grid, d, CONTACT))
            .collect::<Result<Vec<_>>>()?;
        let vol = grid.cell_volume();
        let (active, offset) = self.active(kind);
        let parts = (0..grid.len())
            .into_par_iter()
            .map(|c| -> Result<f64> {
                let x = grid.point(c);
                let mut s = 0.0;
                for &a in &active {
                    let p: Vec<f64> = (0..m).filter(|&b| b != a).map(|b| contact[b][c]).collect();
                    let pmf = LatticePmf::poisson_binomial(&p)?;
                    s += self.weights[a] * self.densities[a].at(&x) * kind.probability(&pmf, self.thresholds[a]);
                }
                Ok(s * vol)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(offset + parts.iter().sum::<f64>())
    }

    pub fn mean(&self, kind: StatisticKind) -> Result<MeanEstimate> {
        match &self.grid {
            None => {
                let pmf = LatticePmf::poisson_binomial(&vec![self.uniform_contact(); self.balls() - 1])?;
                Ok(MeanEstimate::exact(
                    self.weights
                        .iter()
                        .zip(&self.thresholds)
                        .map(|(w, &d)| w * kind.probability(&pmf, d))
                        .sum(),
                ))
            }
            Some(g) => {
                let value = self.quadrature(g, kind)?;
                let coarse = self.quadrature(&MidpointGrid { torus: g.torus, k: g.k / 2 }, kind)?;
                Ok(MeanEstimate {
                    value,
                    error_estimate: (value - coarse).abs(),
                })
            }
        }
    }

    /// `|w| |d| (sigma_d + 1)` for `ge`, `|w| (sigma_d + sigma_{d+1} + 1)` for `ne`,
    /// over the non-constant indicators.
    pub fn coupling_constant(&self, kind: StatisticKind) -> Result<f64> {
        let (active, _) = self.active(kind);
        let w = active.iter().map(|&a| self.weights[a]).fold(0.0, f64::max);
        let d: Vec<i64> = active.iter().map(|&a| self.thresholds[a]).collect();
        let s = sigma_d(&d, self.kappa1) as f64;
        Ok(match kind {
            StatisticKind::Ge => {
                let dmax = d.iter().copied().max().unwrap_or(0) as f64;
                w * dmax * (s + 1.0)
            }
            StatisticKind::Ne => {
                let up: Vec<i64> = d.iter().map(|x| x + 1).collect();
                w * (s + sigma_d(&up, self.kappa1) as f64 + 1.0)
            }
        })
    }

    pub fn sample_configuration(&self, rng: &mut dyn RngCore) -> Result<Configuration> {
        Ok(Configuration::Points {
            points: self.densities.iter().map(|d| d.sample(rng)).collect(),
        })
    }

    /// Neighbor count of every ball.
    pub fn neighbor_counts(&self, points: &[Vec<f64>]) -> Vec<i64> {
        let m = points.len();
        let mut counts = vec![0i64; m];
        for a in 0..m {
            for b in a + 1..m {
                if self.torus.distance(&points[a], &points[b]) <= CONTACT {
                    counts[a] += 1;
                    counts[b] += 1;
                }
            }
        }
        counts
    }

    fn evaluate(&self, points: &[Vec<f64>], urns: &[usize], kind: StatisticKind) -> f64 {
        let counts = self.neighbor_counts(points);
        crate::models::weighted_statistic(&counts, &self.weights, &self.thresholds, urns, kind)
    }

    pub fn statistic(&self, config: &Configuration, kind: StatisticKind) -> Result<f64> {
        match config {
            Configuration::Points { points }
                if points.len() == self.balls() && points.iter().all(|x| x.len() == self.torus.dim()) =>
            {
                let all: Vec<usize> = (0..self.balls()).collect();
                Ok(self.evaluate(points, &all, kind))
            }
            _ => Err(Error::invalid("configuration is not a germ set for this model")),
        }
    }

    pub fn pair_sampler(&self, kind: StatisticKind) -> Result<Box<dyn PairSampler>> {
        if !self.is_uniform() {
            return Err(Error::Unsupported(
                "coupled pairs for neighbor counts need uniform germ densities".into(),
            ));
        }
        let (active, _) = self.active(kind);
        let q = vec![self.uniform_contact(); self.balls() - 1];
        let pmf = LatticePmf::poisson_binomial(&q)?;
        let engine = Engine::new(active.iter().map(|&a| (&pmf, self.thresholds[a], self.weights[a])), kind)?;
        Ok(Box::new(NeighborPairs {
            chain: Arc::new(MonotoneChain::new(&q)?),
            c: self.coupling_constant(kind)?,
            model: self.clone(),
            kind,
            active,
            engine,
        }))
    }
}

struct NeighborPairs {
    model: GgNeighbors,
    kind: StatisticKind,
    active: Vec<usize>,
    engine: Engine,
    chain: Arc<MonotoneChain>,
    c: f64,
}

impl PairSampler for NeighborPairs {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<CoupledSample> {
        let g = &self.model;
        let (slot, n, t) = self.engine.draw(rng);
        let alpha = self.active[slot];
        let u = g.torus.uniform_point(rng);
        let (base_bits, lifted_bits) = chain_pair(&self.chain, n, t, rng)?;
        let mut base = Vec::with_capacity(g.balls());
        let mut lifted = Vec::with_capacity(g.balls());
        let mut j = 0;
        for b in 0..g.balls() {
            if b == alpha {
                base.push(u.clone());
                lifted.push(u.clone());
                continue;
            }
            let draw = |inside: bool, rng: &mut dyn RngCore| {
                if inside {
                    g.torus.uniform_in_ball(&u, CONTACT, rng)
                } else {
                    g.densities[b].sample_outside(&u, CONTACT, rng)
                }
            };
            let x = draw(base_bits[j], rng)?;
            let y = if lifted_bits[j] == base_bits[j] {
                x.clone()
            } else {
                draw(lifted_bits[j], rng)?
            };
            base.push(x);
            lifted.push(y);
            j += 1;
        }
        Ok(CoupledSample {
            y: g.evaluate(&base, &self.active, self.kind),
            y_s: g.evaluate(&lifted, &self.active, self.kind),
            alpha,
            statistic: self.kind,
        })
    }

    fn reduced_mean(&self) -> f64 {
        self.engine.total()
    }

    fn coupling_constant(&self) -> f64 {
        self.c
    }
}

#[cfg(test)]
mod tests {
    use super::super::Density;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn planar(m: usize, n: f64, d: i64) -> GgNeighbors {
        GgNeighbors::new(2, n, &vec![Density::Uniform; m], vec![1.0; m], vec![d; m], None, None).unwrap()
    }

    #[test]
    fn constants_in_the_plane() {
        let g = planar(8, 400.0, 1);
        assert_eq!(g.coupling_constant(StatisticKind::Ge).unwrap(), 6.0);
        for d in 1..=4 {
            let g = planar(8, 400.0, d);
            assert_eq!(g.coupling_constant(StatisticKind::Ge).unwrap(), (d * (5 * d + 1)) as f64);
        }
        assert_eq!(g.coupling_constant(StatisticKind::Ne).unwrap(), 5.0 + 10.0 + 1.0);
    }

    #[test]
    fn uniform_marginal_is_binomial() {
        let g = planar(8, 400.0, 1);
        let q = 4.0 * std::f64::consts::PI / 400.0;
        let pmf = g.marginal_pmf_at(3, &[1.0, 2.0]).unwrap();
        assert_eq!(pmf.hi(), 7);
        assert!((pmf.mean() - 7.0 * q).abs() < 1e-12);
        let mu = g.mean(StatisticKind::Ge).unwrap().value;
        assert!((mu - 8.0 * (1.0 - (1.0 - q).powi(7))).abs() < 1e-12);
    }

    #[test]
    fn pairs_stay_within_the_constant() {
        let g = planar(8, 400.0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in StatisticKind::ALL {
            let s = g.pair_sampler(kind).unwrap();
            for _ in 0..3000 {
                let p = s.sample(&mut rng).unwrap();
                assert!(p.y_s - p.y <= s.coupling_constant() + 1e-12, "{kind:?} {p:?}");
            }
        }
    }

    #[test]
    fn sampled_mean_matches() {
        let g = GgNeighbors::new(1, 40.0, &vec![Density::Uniform; 6], vec![1.0; 6], vec![1; 6], None, None).unwrap();
        let mu = g.mean(StatisticKind::Ge).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 20_000;
        let ys: Vec<f64> = (0..n)
            .map(|_| {
                let c = g.sample_configuration(&mut rng).unwrap();
                g.statistic(&c, StatisticKind::Ge).unwrap()
            })
            .collect();
        let avg = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - avg).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((avg - mu).abs() <= 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn non_uniform_mean_and_refusal() {
        let dens = Density::Grid {
            cells_per_axis: 2,
            values: vec![1.0, 3.0],
        };
        let g = GgNeighbors::new(1, 40.0, &vec![dens; 4], vec![1.0; 4], vec![1; 4], None, Some(800)).unwrap();
        let mu = g.mean(StatisticKind::Ge).unwrap();
        assert!(mu.error_estimate < 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let ys: Vec<f64> = (0..n)
            .map(|_| {
                let c = g.sample_configuration(&mut rng).unwrap();
                g.statistic(&c, StatisticKind::Ge).unwrap()
            })
            .collect();
        let avg = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - avg).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((avg - mu.value).abs() <= 4.0 * (var / n as f64).sqrt() + mu.error_estimate);
        assert!(matches!(g.pair_sampler(StatisticKind::Ge), Err(Error::Unsupported(_))));
    }

    #[test]
    fn validation() {
        assert!(GgNeighbors::new(2, 30.0, &vec![Density::Uniform; 8], vec![1.0; 8], vec![1; 8], None, None).is_err());
        assert!(GgNeighbors::new(4, 1e4, &vec![Density::Uniform; 3], vec![1.0; 3], vec![1; 3], None, None).is_err());
        assert!(GgNeighbors::new(4, 1e4, &vec![Density::Uniform; 3], vec![1.0; 3], vec![1; 3], Some(24), None).is_ok());
        assert!(GgNeighbors::new(2, 400.0, &vec![Density::Uniform; 3], vec![1.0; 3], vec![1; 3], Some(6), None).is_err());
    }

    #[test]
    fn reduction_drops_sure_indicators() {
        let g = GgNeighbors::new(2, 400.0, &vec![Density::Uniform; 3], vec![1.0, 2.0, 4.0], vec![0, 1, 5], None, None)
            .unwrap();
        assert_eq!(g.offset(StatisticKind::Ge).unwrap(), 1.0);
        assert_eq!(g.offset(StatisticKind::Ne).unwrap(), 4.0);
        assert_eq!(g.coupling_constant(StatisticKind::Ge).unwrap(), 2.0 * 1.0 * 2.0);
    }
}
