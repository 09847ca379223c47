//! Brownian sampling, left-point Itô sums and quadratic variation.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{argument, Result};
use crate::grid::TimeGrid;
use crate::path::{Path, PathValues};
use crate::rng::Seed;

/// A standard normal draw.
#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Brownian motion on `grid`, pinned to 0 at the first grid point.
pub fn sample_brownian(seed: Seed, grid: &TimeGrid) -> Path {
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(grid.len());
    let mut b = 0.0;
    values.push(b);
    for dt in grid.steps() {
        b += dt.sqrt() * normal(&mut rng);
        values.push(b);
    }
    Path::scalar(grid.clone(), values).expect("one value per grid point")
}

/// Cumulative left-point sum `sum f(t_i) (D(t_{i+1}) - D(t_i))`, starting at 0.
pub fn ito_sum(integrand: &Path, driver: &Path) -> Result<Path> {
    if integrand.grid() != driver.grid() {
        return argument("integrand and driver must share a grid");
    }
    let f = integrand.scalar_values()?;
    let d = driver.scalar_values()?;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(f.len());
    out.push(0.0);
    for i in 0..f.len() - 1 {
        acc += f[i] * (d[i + 1] - d[i]);
        out.push(acc);
    }
    Path::scalar(driver.grid().clone(), out)
}

/// Cumulative sum of squared increments of a scalar path.
pub fn quadratic_variation(path: &Path) -> Result<Path> {
    let v = path.scalar_values()?;
    Path::scalar(path.grid().clone(), cumulative_sq_increments(v))
}

/// Grid quadratic variation of a planar path summed over both coordinates
/// (the trace of the bracket matrix).
pub fn trace_quadratic_variation(path: &Path) -> Result<Path> {
    let v = path.planar_values()?;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(v.len());
    out.push(0.0);
    for w in v.windows(2) {
        acc += (w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2);
        out.push(acc);
    }
    Path::new(path.grid().clone(), PathValues::Scalar(out))
}

pub(crate) fn cumulative_sq_increments(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(v.len());
    out.push(0.0);
    for w in v.windows(2) {
        acc += (w[1] - w[0]).powi(2);
        out.push(acc);
    }
    out
}
