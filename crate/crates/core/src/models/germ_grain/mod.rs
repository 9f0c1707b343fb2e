//! Germ-grain models on the torus `C_n = [0, n^(1/p))^p`.

mod geometry;
mod neighbors;
mod volume;

use rayon::prelude::*;

pub use geometry::{kappa1, sigma_d, unit_ball_volume, Density, Field, Torus};
pub use neighbors::GgNeighbors;
pub use volume::GgVolume;

pub(crate) use geometry::{lcm, DensityGrid, MidpointGrid};

use crate::error::{Error, Result};

/// Largest number of grid points evaluated by the midpoint rules.
pub(crate) const MAX_GRID_POINTS: usize = 1 << 22;

/// Default midpoint-grid points per axis.
pub(crate) fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 4096,
        2 => 256,
        3 => 32,
        _ => 8,
    }
}

/// Points per axis: at least `requested`, a multiple of `2 * base` so that
/// the half-resolution grid still refines every field.
pub(crate) fn grid_resolution(dim: usize, requested: Option<usize>, base: usize) -> Result<usize> {
    let step = 2 * base;
    let want = requested.unwrap_or_else(|| default_resolution(dim)).max(1);
    let k = want.div_ceil(step) * step;
    match k.checked_pow(dim as u32) {
        Some(total) if total <= MAX_GRID_POINTS => Ok(k),
        _ => Err(Error::invalid(format!(
            "a grid of {k} points per axis in dimension {dim} exceeds {MAX_GRID_POINTS} points"
        ))),
    }
}

/// `P(D(x_c, U) <= r)` at every point of `grid`, for `U` with the given density.
///
/// Exact in one dimension; otherwise a midpoint sum over `sub` (the same
/// grid, or a coarser one for an error estimate).
pub(crate) fn ball_masses(grid: &MidpointGrid, sub: &MidpointGrid, density: &DensityGrid, r: f64) -> Result<Vec<f64>> {
    let dim = grid.torus.dim();
    let masses: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|c| {
            let x = grid.point(c);
            if dim == 1 {
                density.ball_mass_1d(x[0], r)
            } else {
                let mut m = 0.0;
                sub.for_each_within(&x, r, |c2| m += density.at(&sub.point(c2)));
                m * sub.cell_volume()
            }
        })
        .collect();
    if masses.iter().any(|&m| !(m > 0.0 && m < 1.0)) {
        return Err(Error::invalid(
            "grid too coarse for the ball radius: some ball masses are not in (0, 1); raise the resolution",
        ));
    }
    Ok(masses)
}
