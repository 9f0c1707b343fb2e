//! Weighted volume covered by at least (or other than) `d(x)` grains.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore};

use super::{ball_masses, grid_resolution, lcm, unit_ball_volume, DensityGrid, Field, MidpointGrid, Torus};
use crate::models::config::GgVolumeConfig;
use crate::models::engine::{chain_pair, Engine, UrnLift};
use crate::models::{Configuration, CoupledSample, MeanEstimate, PairSampler, StatisticKind};
use crate::couplings::MonotoneChain;
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// How the covered volume is integrated.
#[derive(Debug, Clone)]
enum Rule {
    /// One dimension, uniform germs: exact sweep over ball endpoints and field cells.
    Exact { cells: usize },
    /// Midpoint rule on a grid shared by means, statistics and couplings.
    Grid {
        grid: MidpointGrid,
        /// `p_a(x_c)` per point, or one shared row when every germ is uniform.
        probs: Vec<Vec<f64>>,
        /// Same quantity from the half-resolution grid, when it differs.
        coarse: Option<Vec<Vec<f64>>>,
    },
}

/// `Y = int w(x) 1(M(x) >= d(x)) dx` where `M(x)` counts grains covering `x`.
#[derive(Debug, Clone)]
pub struct GgVolume {
    torus: Torus,
    radii: Vec<f64>,
    densities: Vec<DensityGrid>,
    weight: Field,
    threshold: Field,
    rule: Rule,
}

impl GgVolume {
    pub(crate) fn from_config(c: &GgVolumeConfig) -> Result<Self> {
        let m = c.grains;
        Self::new(
            c.dimension,
            c.volume,
            c.radii.expand(m, "radii")?,
            &c.densities.expand(m, "densities")?,
            c.weight.clone(),
            c.threshold.clone(),
            c.resolution,
        )
    }

    pub fn new(
        dimension: usize,
        volume: f64,
        radii: Vec<f64>,
        densities: &[super::Density],
        weight: Field,
        threshold: Field,
        resolution: Option<usize>,
    ) -> Result<Self> {
        let torus = Torus::new(dimension, volume)?;
        let m = radii.len();
        if m == 0 {
            return Err(Error::invalid("at least one grain is required"));
        }
        if densities.len() != m {
            return Err(Error::invalid("one density per grain is required"));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(format!("radius {r} must be positive")));
        }
        let side = torus.side();
        let total: f64 = radii.iter().sum();
        if !((dimension as f64).sqrt() * side > 2.0 * total) {
            return Err(Error::invalid(format!(
                "torus too small: sqrt(p) * side = {} must exceed twice the summed radii {}",
                (dimension as f64).sqrt() * side,
                2.0 * total
            )));
        }
        if let Some(r) = radii.iter().find(|&&r| r > side / 2.0) {
            return Err(Error::invalid(format!("radius {r} exceeds half the torus side {side}")));
        }
        weight.validate(dimension, "weight")?;
        threshold.validate(dimension, "threshold")?;
        if weight.values().any(|w| w < 0.0) || !(weight.max() > 0.0) {
            return Err(Error::invalid("the weight function must be nonnegative and not identically zero"));
        }
        if threshold.values().any(|d| d.fract() != 0.0 || d < 1.0 || d > m as f64) {
            return Err(Error::invalid(format!("thresholds must be integers in [1, {m}]")));
        }
        let densities = densities
            .iter()
            .enumerate()
            .map(|(a, d)| DensityGrid::new(torus, d, &format!("density {a}")))
            .collect::<Result<Vec<_>>>()?;
        let uniform = densities.iter().all(|d| d.is_uniform());
        let base = densities
            .iter()
            .map(|d| d.cells_per_axis())
            .fold(lcm(weight.cells_per_axis(), threshold.cells_per_axis()), lcm);
        let rule = if dimension == 1 && uniform {
            Rule::Exact { cells: base }
        } else {
            let k = grid_resolution(dimension, resolution, base)?;
            let grid = MidpointGrid { torus, k };
            if uniform {
                let row = radii
                    .iter()
                    .map(|r| unit_ball_volume(dimension) * r.powi(dimension as i32) / torus.volume())
                    .collect();
                Rule::Grid {
                    grid,
                    probs: vec![row],
                    coarse: None,
                }
            } else {
                let half = MidpointGrid { torus, k: k / 2 };
                let fine = per_point_masses(&grid, &grid, &densities, &radii)?;
                let coarse = if dimension == 1 {
                    None
                } else {
                    Some(per_point_masses(&grid, &half, &densities, &radii)?)
                };
                Rule::Grid {
                    grid,
                    probs: fine,
                    coarse,
                }
            }
        };
        Ok(Self {
            torus,
            radii,
            densities,
            weight,
            threshold,
            rule,
        })
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn grains(&self) -> usize {
        self.radii.len()
    }

    /// True when the statistic is integrated exactly rather than on a grid.
    pub fn is_exact(&self) -> bool {
        matches!(self.rule, Rule::Exact { .. })
    }

    /// `int w(x) dx`.
    pub fn total_weight(&self) -> f64 {
        let vals: Vec<f64> = self.weight.values().collect();
        vals.iter().sum::<f64>() * self.torus.volume() / vals.len() as f64
    }

    /// Quadrature cells: `(representative point, volume, w, d)`.
    fn cells(&self) -> Vec<(Vec<f64>, f64, f64, i64)> {
        let grid = match &self.rule {
            Rule::Exact { cells } => MidpointGrid {
                torus: self.torus,
                k: *cells,
            },
            Rule::Grid { grid, .. } => *grid,
        };
        (0..grid.len())
            .map(|c| {
                let x = grid.point(c);
                let w = self.weight.at(&self.torus, &x);
                let d = self.threshold.at(&self.torus, &x) as i64;
                (x, grid.cell_volume(), w, d)
            })
            .collect()
    }

    fn probs_at<'a>(&self, rows: &'a [Vec<f64>], c: usize) -> &'a [f64] {
        if rows.len() == 1 {
            &rows[0]
        } else {
            &rows[c]
        }
    }

    fn uniform_row(&self) -> Vec<f64> {
        self.radii
            .iter()
            .map(|r| unit_ball_volume(self.torus.dim()) * r.powi(self.torus.dim() as i32) / self.torus.volume())
            .collect()
    }

    fn integrate(&self, rows: &[Vec<f64>], kind: StatisticKind) -> Result<f64> {
        let mut cache: HashMap<usize, LatticePmf> = HashMap::new();
        let mut total = 0.0;
        for (c, (_, vol, w, d)) in self.cells().into_iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let key = if rows.len() == 1 { 0 } else { c };
            let pmf = match cache.get(&key) {
                Some(p) => p.clone(),
                None => {
                    let p = LatticePmf::poisson_binomial(self.probs_at(rows, c))?;
                    if rows.len() == 1 {
                        cache.insert(0, p.clone());
                    }
                    p
                }
            };
            total += vol * w * kind.probability(&pmf, d);
        }
        Ok(total)
    }

    /// Mean of the statistic as integrated by this model; the error estimate
    /// compares against a half-resolution grid when the rule is approximate.
    pub fn mean(&self, kind: StatisticKind) -> Result<MeanEstimate> {
        match &self.rule {
            Rule::Exact { .. } => Ok(MeanEstimate::exact(self.integrate(&[self.uniform_row()], kind)?)),
            Rule::Grid { probs, coarse, .. } => {
                let value = self.integrate(probs, kind)?;
                let error_estimate = match coarse {
                    Some(rows) => (self.integrate(rows, kind)? - value).abs(),
                    None => 0.0,
                };
                Ok(MeanEstimate { value, error_estimate })
            }
        }
    }

    pub fn offset(&self, _kind: StatisticKind) -> Result<f64> {
        // Every threshold lies in [1, m] and every coverage count can take any value in [0, m].
        Ok(0.0)
    }

    /// Volume that one inserted grain can add to the statistic.
    fn grain_volume(&self) -> f64 {
        let r = self.radii.iter().copied().fold(0.0, f64::max);
        let p = self.torus.dim();
        match &self.rule {
            Rule::Exact { .. } => unit_ball_volume(p) * r.powi(p as i32),
            Rule::Grid { grid, .. } => {
                let reach = r + grid.spacing() * (p as f64).sqrt() / 2.0;
                (unit_ball_volume(p) * reach.powi(p as i32)).min(self.torus.volume())
            }
        }
    }

    /// `pi_p |w| |d| |rho|^p` for `ge` and `2 pi_p |w| |rho|^p` for `ne`; on a
    /// grid the radius is widened by half a cell diagonal.
    pub fn coupling_constant(&self, kind: StatisticKind) -> Result<f64> {
        let w = self.weight.max();
        let d = self.threshold.max();
        Ok(match kind {
            StatisticKind::Ge => w * d * self.grain_volume(),
            StatisticKind::Ne => 2.0 * w * self.grain_volume(),
        })
    }

    pub fn sample_configuration(&self, rng: &mut dyn RngCore) -> Result<Configuration> {
        Ok(Configuration::Points {
            points: self.densities.iter().map(|d| d.sample(rng)).collect(),
        })
    }

    fn points<'a>(&self, config: &'a Configuration) -> Result<&'a [Vec<f64>]> {
        match config {
            Configuration::Points { points }
                if points.len() == self.grains() && points.iter().all(|x| x.len() == self.torus.dim()) =>
            {
                Ok(points)
            }
            _ => Err(Error::invalid("configuration is not a germ set for this model")),
        }
    }

    pub fn statistic(&self, config: &Configuration, kind: StatisticKind) -> Result<f64> {
        let points = self.points(config)?;
        Ok(self.evaluate(points, kind))
    }

    fn evaluate(&self, points: &[Vec<f64>], kind: StatisticKind) -> f64 {
        match &self.rule {
            Rule::Exact { cells } => self.sweep(points, *cells, kind),
            Rule::Grid { grid, .. } => {
                let mut count = vec![0u32; grid.len()];
                for (x, &r) in points.iter().zip(&self.radii) {
                    grid.for_each_within(x, r, |c| count[c] += 1);
                }
                let mut y = 0.0;
                for (c, &n) in count.iter().enumerate() {
                    let x = grid.point(c);
                    let d = self.threshold.at(&self.torus, &x) as i64;
                    if kind.indicator(n as i64, d) {
                        y += self.weight.at(&self.torus, &x);
                    }
                }
                y * grid.cell_volume()
            }
        }
    }

    /// Exact one-dimensional integral: coverage is constant between ball
    /// endpoints and field cell boundaries.
    fn sweep(&self, points: &[Vec<f64>], cells: usize, kind: StatisticKind) -> f64 {
        let side = self.torus.side();
        let h = side / cells as f64;
        let mut cuts: Vec<f64> = (0..=cells).map(|j| j as f64 * h).collect();
        for (x, &r) in points.iter().zip(&self.radii) {
            cuts.push(self.torus.wrap(x[0] - r));
            cuts.push(self.torus.wrap(x[0] + r));
        }
        cuts.sort_by(f64::total_cmp);
        let mut y = 0.0;
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let mid = [(w[0] + w[1]) / 2.0];
            let covered = points
                .iter()
                .zip(&self.radii)
                .filter(|(x, &r)| self.torus.distance(x, &mid) <= r)
                .count() as i64;
            let d = self.threshold.at(&self.torus, &mid) as i64;
            if kind.indicator(covered, d) {
                y += len * self.weight.at(&self.torus, &mid);
            }
        }
        y
    }

    pub fn pair_sampler(&self, kind: StatisticKind) -> Result<Box<dyn PairSampler>> {
        let cells = self.cells();
        let rows: Vec<Vec<f64>> = match &self.rule {
            Rule::Exact { .. } => vec![self.uniform_row()],
            Rule::Grid { probs, .. } => probs.clone(),
        };
        let shared = rows.len() == 1;
        let shared_pmf = if shared {
            Some(LatticePmf::poisson_binomial(&rows[0])?)
        } else {
            None
        };
        let mut lifts = Vec::with_capacity(cells.len());
        let mut masses = Vec::with_capacity(cells.len());
        let mut slots = Vec::with_capacity(cells.len());
        for (c, (_, vol, w, d)) in cells.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let pmf = match &shared_pmf {
                Some(p) => p.clone(),
                None => LatticePmf::poisson_binomial(&rows[c])?,
            };
            masses.push(vol * w * kind.probability(&pmf, *d));
            lifts.push(UrnLift::new(&pmf, *d, kind)?);
            slots.push(c);
        }
        let engine = Engine::from_parts(lifts, masses)?;
        let chains = ChainCache {
            shared: if shared { Some(Arc::new(MonotoneChain::new(&rows[0])?)) } else { None },
            cache: Mutex::new(HashMap::new()),
        };
        Ok(Box::new(VolumePairs {
            c: self.coupling_constant(kind)?,
            model: self.clone(),
            kind,
            rows,
            slots,
            engine,
            chains,
        }))
    }
}

fn per_point_masses(
    grid: &MidpointGrid,
    sub: &MidpointGrid,
    densities: &[DensityGrid],
    radii: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let columns = densities
        .iter()
        .zip(radii)
        .map(|(d, &r)| ball_masses(grid, sub, d, r))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..grid.len()).map(|c| columns.iter().map(|col| col[c]).collect()).collect())
}

#[derive(Debug)]
struct ChainCache {
    shared: Option<Arc<MonotoneChain>>,
    cache: Mutex<HashMap<usize, Arc<MonotoneChain>>>,
}

impl ChainCache {
    fn get(&self, cell: usize, p: &[f64]) -> Result<Arc<MonotoneChain>> {
        if let Some(c) = &self.shared {
            return Ok(c.clone());
        }
        let mut cache = self.cache.lock().map_err(|_| Error::Internal("chain cache poisoned".into()))?;
        if let Some(c) = cache.get(&cell) {
            return Ok(c.clone());
        }
        let chain = Arc::new(MonotoneChain::new(p)?);
        cache.insert(cell, chain.clone());
        Ok(chain)
    }
}

struct VolumePairs {
    model: GgVolume,
    kind: StatisticKind,
    rows: Vec<Vec<f64>>,
    /// Quadrature cell of each engine slot.
    slots: Vec<usize>,
    engine: Engine,
    chains: ChainCache,
    c: f64,
}

impl PairSampler for VolumePairs {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<CoupledSample> {
        let g = &self.model;
        let (slot, n, t) = self.engine.draw(rng);
        let cell = self.slots[slot];
        let u = match &g.rule {
            Rule::Exact { cells } => {
                let h = g.torus.side() / *cells as f64;
                vec![g.torus.wrap((cell as f64 + rng.gen::<f64>()) * h)]
            }
            Rule::Grid { grid, .. } => grid.point(cell),
        };
        let p = g.probs_at(&self.rows, cell);
        let chain = self.chains.get(cell, p)?;
        let (base_bits, lifted_bits) = chain_pair(&chain, n, t, rng)?;
        let mut base = Vec::with_capacity(g.grains());
        let mut lifted = Vec::with_capacity(g.grains());
        for a in 0..g.grains() {
            let (dens, r) = (&g.densities[a], g.radii[a]);
            let draw = |inside: bool, rng: &mut dyn RngCore| {
                if inside {
                    dens.sample_inside(&u, r, rng)
                } else {
                    dens.sample_outside(&u, r, rng)
                }
            };
            let x = draw(base_bits[a], rng)?;
            let y = if lifted_bits[a] == base_bits[a] {
                x.clone()
            } else {
                draw(lifted_bits[a], rng)?
            };
            base.push(x);
            lifted.push(y);
        }
        Ok(CoupledSample {
            y: g.evaluate(&base, self.kind),
            y_s: g.evaluate(&lifted, self.kind),
            alpha: cell,
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
