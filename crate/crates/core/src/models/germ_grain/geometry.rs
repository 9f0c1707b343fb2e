//! Torus geometry, piecewise-constant fields and densities, and the midpoint grid.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^p`.
pub fn unit_ball_volume(p: usize) -> f64 {
    match p {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / p as f64 * unit_ball_volume(p - 2),
    }
}

/// Largest number of pairwise disjoint unit balls that all meet a fixed unit ball.
pub fn kappa1(p: usize) -> Option<usize> {
    match p {
        1 => Some(2),
        2 => Some(5),
        3 => Some(12),
        _ => None,
    }
}

/// Sum of the `kappa1` largest thresholds.
pub fn sigma_d(d: &[i64], kappa1: usize) -> i64 {
    let mut sorted = d.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.iter().take(kappa1).sum()
}

/// The cube `[0, side)^dim` with opposite faces identified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torus {
    dim: usize,
    side: f64,
}

impl Torus {
    /// Torus of total volume `volume`.
    pub fn new(dim: usize, volume: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::invalid(format!("volume {volume} must be positive and finite")));
        }
        Ok(Self {
            dim,
            side: volume.powf(1.0 / dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Wrapped coordinate difference in `[-side/2, side/2]`.
    pub fn delta(&self, a: f64, b: f64) -> f64 {
        let mut d = (a - b).rem_euclid(self.side);
        if d > self.side / 2.0 {
            d -= self.side;
        }
        d
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| self.delta(x, y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn wrap(&self, x: f64) -> f64 {
        let y = x.rem_euclid(self.side);
        // rem_euclid can round up to exactly `side`.
        if y >= self.side {
            0.0
        } else {
            y
        }
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim).map(|_| rng.gen::<f64>() * self.side).collect()
    }

    /// Uniform point of the closed ball `B(center, r)`, by rejection from its bounding cube.
    pub fn uniform_in_ball<R: Rng + ?Sized>(&self, center: &[f64], r: f64, rng: &mut R) -> Result<Vec<f64>> {
        let mut offset = vec![0.0; self.dim];
        for _ in 0..REJECTION_CAP {
            for o in offset.iter_mut() {
                *o = (2.0 * rng.gen::<f64>() - 1.0) * r;
            }
            if offset.iter().map(|o| o * o).sum::<f64>() <= r * r {
                return Ok(center.iter().zip(&offset).map(|(&c, &o)| self.wrap(c + o)).collect());
            }
        }
        Err(Error::Rejection(format!(
            "no point of a {}-dimensional ball accepted in {REJECTION_CAP} proposals",
            self.dim
        )))
    }

    /// Row-major index of the cell containing `x` in a grid of `k` cells per axis.
    pub(crate) fn cell_index(&self, x: &[f64], k: usize) -> usize {
        x.iter().fold(0, |acc, &xi| {
            let c = ((xi / self.side) * k as f64).floor() as isize;
            acc * k + c.clamp(0, k as isize - 1) as usize
        })
    }
}

pub(crate) const REJECTION_CAP: usize = 1_000_000;

/// Piecewise-constant function on the torus: a constant or values on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Constant(f64),
    Grid { cells_per_axis: usize, values: Vec<f64> },
}

impl Field {
    pub(crate) fn validate(&self, dim: usize, name: &str) -> Result<()> {
        if let Field::Grid { cells_per_axis, values } = self {
            if *cells_per_axis == 0 {
                return Err(Error::invalid(format!("{name}: cells_per_axis must be positive")));
            }
            let expected = cells_per_axis.checked_pow(dim as u32);
            if expected != Some(values.len()) {
                return Err(Error::invalid(format!(
                    "{name}: grid needs {cells_per_axis}^{dim} values, got {}",
                    values.len()
                )));
            }
        }
        if self.values().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{name}: values must be finite")));
        }
        Ok(())
    }

    pub fn cells_per_axis(&self) -> usize {
        match self {
            Field::Constant(_) => 1,
            Field::Grid { cells_per_axis, .. } => *cells_per_axis,
        }
    }

    pub fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            Field::Constant(v) => Box::new(std::iter::once(*v)),
            Field::Grid { values, .. } => Box::new(values.iter().copied()),
        }
    }

    pub fn max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn at(&self, torus: &Torus, x: &[f64]) -> f64 {
        match self {
            Field::Constant(v) => *v,
            Field::Grid { cells_per_axis, values } => values[torus.cell_index(x, *cells_per_axis)],
        }
    }
}

/// Density of a germ location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub enum Density {
    Uniform,
    /// Proportional to the given nonnegative cell values.
    Grid { cells_per_axis: usize, values: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DensityRepr {
    Name(String),
    Grid { cells_per_axis: usize, values: Vec<f64> },
}

impl TryFrom<DensityRepr> for Density {
    type Error = String;

    fn try_from(r: DensityRepr) -> std::result::Result<Self, String> {
        match r {
            DensityRepr::Name(s) if s == "uniform" => Ok(Density::Uniform),
            DensityRepr::Name(s) => Err(format!("unknown density {s:?}")),
            DensityRepr::Grid { cells_per_axis, values } => Ok(Density::Grid { cells_per_axis, values }),
        }
    }
}

impl From<Density> for DensityRepr {
    fn from(d: Density) -> Self {
        match d {
            Density::Uniform => DensityRepr::Name("uniform".into()),
            Density::Grid { cells_per_axis, values } => DensityRepr::Grid { cells_per_axis, values },
        }
    }
}

impl Density {
    pub fn is_uniform(&self) -> bool {
        matches!(self, Density::Uniform)
    }

    pub fn cells_per_axis(&self) -> usize {
        match self {
            Density::Uniform => 1,
            Density::Grid { cells_per_axis, .. } => *cells_per_axis,
        }
    }
}

/// A normalized piecewise-constant density ready for evaluation and sampling.
#[derive(Debug, Clone)]
pub(crate) struct DensityGrid {
    torus: Torus,
    k: usize,
    /// Density value per cell; integrates to one.
    values: Vec<f64>,
    max: f64,
    cells: Option<WeightedIndex<f64>>,
}

impl DensityGrid {
    pub fn new(torus: Torus, density: &Density, name: &str) -> Result<Self> {
        let (k, raw) = match density {
            Density::Uniform => (1, vec![1.0]),
            Density::Grid { cells_per_axis, values } => {
                Field::Grid {
                    cells_per_axis: *cells_per_axis,
                    values: values.clone(),
                }
                .validate(torus.dim(), name)?;
                if values.iter().any(|&v| v <= 0.0) {
                    return Err(Error::invalid(format!("{name}: density values must be strictly positive")));
                }
                (*cells_per_axis, values.clone())
            }
        };
        let cell_volume = torus.volume() / raw.len() as f64;
        let total: f64 = raw.iter().sum::<f64>() * cell_volume;
        let values: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let max = values.iter().copied().fold(0.0, f64::max);
        let cells = if values.len() > 1 {
            Some(WeightedIndex::new(&values).map_err(|e| Error::invalid(format!("{name}: {e}")))?)
        } else {
            None
        };
        Ok(Self {
            torus,
            k,
            values,
            max,
            cells,
        })
    }

    pub fn is_uniform(&self) -> bool {
        self.values.len() == 1
    }

    pub fn cells_per_axis(&self) -> usize {
        self.k
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        self.values[self.torus.cell_index(x, self.k)]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.cells {
            None => self.torus.uniform_point(rng),
            Some(w) => {
                let mut c = w.sample(rng);
                let h = self.torus.side() / self.k as f64;
                let mut x = vec![0.0; self.torus.dim()];
                for i in (0..self.torus.dim()).rev() {
                    x[i] = ((c % self.k) as f64 + rng.gen::<f64>()) * h;
                    c /= self.k;
                }
                x
            }
        }
    }

    /// Draws from the density restricted to `B(center, r)`.
    pub fn sample_inside<R: Rng + ?Sized>(&self, center: &[f64], r: f64, rng: &mut R) -> Result<Vec<f64>> {
        if self.is_uniform() {
            return self.torus.uniform_in_ball(center, r, rng);
        }
        for _ in 0..REJECTION_CAP {
            let x = self.torus.uniform_in_ball(center, r, rng)?;
            if rng.gen::<f64>() * self.max <= self.at(&x) {
                return Ok(x);
            }
        }
        Err(Error::Rejection("no point accepted inside the ball".into()))
    }

    /// Draws from the density restricted to the complement of `B(center, r)`.
    pub fn sample_outside<R: Rng + ?Sized>(&self, center: &[f64], r: f64, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..REJECTION_CAP {
            let x = self.sample(rng);
            if self.torus.distance(&x, center) > r {
                return Ok(x);
            }
        }
        Err(Error::Rejection("no point accepted outside the ball".into()))
    }

    /// Exact `P(D(x, U) <= r)` for `p = 1`.
    pub fn ball_mass_1d(&self, x: f64, r: f64) -> f64 {
        let side = self.torus.side();
        if 2.0 * r >= side {
            return 1.0;
        }
        let cdf = |y: f64| -> f64 {
            // Mass of [0, y) for y in [0, side].
            let h = side / self.k as f64;
            let full = ((y / h).floor() as usize).min(self.k);
            let mut m: f64 = self.values[..full].iter().sum::<f64>() * h;
            if full < self.k {
                m += self.values[full] * (y - full as f64 * h);
            }
            m
        };
        let a = x - r;
        let b = x + r;
        let wrapped = |lo: f64, hi: f64| cdf(hi) - cdf(lo);
        let mass = if a < 0.0 {
            wrapped(0.0, b) + wrapped(a + side, side)
        } else if b > side {
            wrapped(a, side) + wrapped(0.0, b - side)
        } else {
            wrapped(a, b)
        };
        mass.clamp(0.0, 1.0)
    }
}

/// Midpoint grid with `k` points per axis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MidpointGrid {
    pub torus: Torus,
    pub k: usize,
}

impl MidpointGrid {
    pub fn len(&self) -> usize {
        self.k.pow(self.torus.dim() as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.torus.side() / self.k as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.torus.dim() as i32)
    }

    pub fn point(&self, mut c: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut x = vec![0.0; self.torus.dim()];
        for i in (0..self.torus.dim()).rev() {
            x[i] = ((c % self.k) as f64 + 0.5) * h;
            c /= self.k;
        }
        x
    }

    /// Calls `f` with every grid index whose point lies within `r` of `center`.
    pub fn for_each_within(&self, center: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let dim = self.torus.dim();
        let h = self.spacing();
        let k = self.k as isize;
        // Per-axis candidate ranges, each index listed once even if the ball wraps.
        let axes: Vec<Vec<(usize, f64)>> = center
            .iter()
            .map(|&c| {
                let lo = ((c - r) / h - 0.5).ceil() as isize;
                let hi = ((c + r) / h - 0.5).floor() as isize;
                let hi = hi.min(lo + k - 1);
                (lo..=hi)
                    .map(|j| {
                        let idx = j.rem_euclid(k) as usize;
                        let d = self.torus.delta((idx as f64 + 0.5) * h, c);
                        (idx, d * d)
                    })
                    .collect()
            })
            .collect();
        if axes.iter().any(|a| a.is_empty()) {
            return;
        }
        let r2 = r * r;
        let mut pos = vec![0usize; dim];
        loop {
            let d2: f64 = (0..dim).map(|i| axes[i][pos[i]].1).sum();
            if d2 <= r2 {
                let idx = (0..dim).fold(0, |acc, i| acc * self.k + axes[i][pos[i]].0);
                f(idx);
            }
            let mut i = dim;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                pos[i] += 1;
                if pos[i] < axes[i].len() {
                    break;
                }
                pos[i] = 0;
            }
        }
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_d(&[3, 1, 2], 2), 5);
        assert_eq!(sigma_d(&[2; 9], 5), 10);
        assert_eq!(sigma_d(&[4, 1], 5), 5);
    }

    /// Pairwise disjoint unit intervals meeting `[-1, 1]` have centers in
    /// `[-2, 2]` more than 2 apart; a fine search finds at most two.
    #[test]
    fn kappa_one_dimension_by_search() {
        let centers: Vec<f64> = (-8..=8).map(|i| i as f64 / 4.0).collect();
        let mut best = 0;
        for mask in 1u64..(1 << centers.len()) {
            let chosen: Vec<f64> = (0..centers.len())
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| centers[i])
                .collect();
            if chosen.len() <= best {
                continue;
            }
            if chosen.windows(2).all(|w| w[1] - w[0] > 2.0) {
                best = chosen.len();
            }
        }
        assert_eq!(Some(best), kappa1(1));
    }

    #[test]
    fn toroidal_distance_wraps() {
        let t = Torus::new(2, 100.0).unwrap();
        assert!((t.side() - 10.0).abs() < 1e-12);
        assert!((t.distance(&[0.5, 0.5], &[9.5, 9.5]) - 2f64.sqrt()).abs() < 1e-12);
        assert!((t.distance(&[1.0, 2.0], &[4.0, 6.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn grid_ball_enumeration_matches_scan() {
        let t = Torus::new(2, 64.0).unwrap();
        let g = MidpointGrid { torus: t, k: 16 };
        let center = [0.3, 7.9];
        let mut seen = Vec::new();
        g.for_each_within(&center, 1.7, |c| seen.push(c));
        seen.sort_unstable();
        let scan: Vec<usize> = (0..g.len())
            .filter(|&c| t.distance(&g.point(c), &center) <= 1.7)
            .collect();
        assert_eq!(seen, scan);
    }

    #[test]
    fn exact_ball_mass_one_dimension() {
        let t = Torus::new(1, 10.0).unwrap();
        let d = DensityGrid::new(
            t,
            &Density::Grid {
                cells_per_axis: 2,
                values: vec![1.0, 3.0],
            },
            "f",
        )
        .unwrap();
        // Density 0.05 on [0,5), 0.15 on [5,10).
        assert!((d.ball_mass_1d(2.0, 1.0) - 0.1).abs() < 1e-14);
        assert!((d.ball_mass_1d(5.0, 1.0) - 0.2).abs() < 1e-14);
        assert!((d.ball_mass_1d(0.5, 1.0) - (0.075 + 0.075)).abs() < 1e-14);
    }

    #[test]
    fn conditional_location_samplers() {
        let t = Torus::new(2, 100.0).unwrap();
        let d = DensityGrid::new(t, &Density::Uniform, "f").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = [9.9, 0.1];
        for _ in 0..500 {
            assert!(t.distance(&d.sample_inside(&c, 2.0, &mut rng).unwrap(), &c) <= 2.0);
            assert!(t.distance(&d.sample_outside(&c, 2.0, &mut rng).unwrap(), &c) > 2.0);
        }
    }

    #[test]
    fn density_documents_round_trip() {
        let u: Density = serde_json::from_str("\"uniform\"").unwrap();
        assert_eq!(u, Density::Uniform);
        let g: Density = serde_json::from_str(r#"{"cells_per_axis":2,"values":[1,2]}"#).unwrap();
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"{"cells_per_axis":2,"values":[1.0,2.0]}"#);
        assert!(serde_json::from_str::<Density>("\"gaussian\"").is_err());
        let f: Field = serde_json::from_str("2.5").unwrap();
        assert_eq!(f, Field::Constant(2.5));
    }
}
