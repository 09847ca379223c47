//! Tangential motion `dX = |X|^{-1} (-X2, X1) dB` in polar form.
//!
//! A solution from the origin is `X_t = sqrt(t) (cos θ_t, sin θ_t)` where the
//! angle obeys `dθ = t^{-1/2} dB`. Over a step `[t_i, t_{i+1}]` the pair
//! `(Δθ, ΔB)` is jointly Gaussian with
//!
//! ```text
//! Var Δθ = ln(t_{i+1} / t_i),  Var ΔB = Δt,  Cov = 2 (sqrt(t_{i+1}) - sqrt(t_i)),
//! ```
//!
//! so both are sampled exactly, and the radius never leaves `sqrt(t)`. Under
//! the clock `s = ln t` the angle is a circular Brownian motion.

use std::io::{self, Write};

use rand::Rng;

use crate::brownian::normal;
use crate::error::{argument, domain, Result};
use crate::grid::{GridKind, TimeGrid};
use crate::path::{fmt_f64, Path};
use crate::rng::{Seed, SimRng};
use crate::torus::TorusAngle;

/// Lifted angle trajectory `start + cum[i]` on a grid.
///
/// The start and the cumulative increments are kept apart so that two
/// trajectories driven by the same increments differ by exactly their
/// starting offset.
#[derive(Debug, Clone, PartialEq)]
pub struct AnglePath {
    grid: TimeGrid,
    start: f64,
    cum: Vec<f64>,
}

impl AnglePath {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum.is_empty()
    }

    /// Lifted (unwrapped) angle at grid index `i`.
    pub fn lifted(&self, i: usize) -> f64 {
        self.start + self.cum[i]
    }

    pub fn lifted_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.lifted(i)).collect()
    }

    pub fn angle(&self, i: usize) -> TorusAngle {
        TorusAngle::wrap(self.lifted(i))
    }

    pub fn angles(&self) -> Vec<TorusAngle> {
        (0..self.len()).map(|i| self.angle(i)).collect()
    }

    /// Lifted increment between grid indices `i <= j`.
    pub fn increment(&self, i: usize, j: usize) -> f64 {
        self.cum[j] - self.cum[i]
    }

    pub(crate) fn from_parts(grid: TimeGrid, start: f64, cum: Vec<f64>) -> AnglePath {
        AnglePath { grid, start, cum }
    }

    fn with_start(&self, start: f64) -> AnglePath {
        AnglePath {
            start,
            ..self.clone()
        }
    }
}

/// A tangential-motion path: angle, driving Brownian motion and the implicit
/// radius `sqrt(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPath {
    angle: AnglePath,
    driver: Vec<f64>,
}

impl PolarPath {
    pub fn grid(&self) -> &TimeGrid {
        &self.angle.grid
    }

    pub fn len(&self) -> usize {
        self.driver.len()
    }

    pub fn is_empty(&self) -> bool {
        self.driver.is_empty()
    }

    pub fn angle_path(&self) -> &AnglePath {
        &self.angle
    }

    pub fn lifted(&self, i: usize) -> f64 {
        self.angle.lifted(i)
    }

    pub fn angle(&self, i: usize) -> TorusAngle {
        self.angle.angle(i)
    }

    /// Driving Brownian motion, 0 at the first grid point.
    pub fn driver(&self) -> &[f64] {
        &self.driver
    }

    pub fn driver_path(&self) -> Path {
        Path::scalar(self.grid().clone(), self.driver.clone()).expect("one value per grid point")
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.grid().times()[i].sqrt()
    }

    /// `sqrt(t_i) (cos θ, sin θ)`.
    pub fn planar(&self, i: usize) -> [f64; 2] {
        let r = self.radius(i);
        let (s, c) = self.lifted(i).sin_cos();
        [r * c, r * s]
    }

    /// Planar trajectory; with `from_origin` the point `(0, 0)` at `t = 0` is
    /// prepended.
    pub fn planar_path(&self, from_origin: bool) -> Path {
        let mut times = Vec::with_capacity(self.len() + 1);
        let mut values = Vec::with_capacity(self.len() + 1);
        if from_origin {
            times.push(0.0);
            values.push([0.0, 0.0]);
        }
        times.extend_from_slice(self.grid().times());
        values.extend((0..self.len()).map(|i| self.planar(i)));
        let grid = TimeGrid::from_times(times).expect("t0 > 0 keeps the grid increasing");
        Path::planar(grid, values).expect("one value per grid point")
    }

    /// CSV with header `t,theta,lifted,b,x1,x2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,theta,lifted,b,x1,x2")?;
        for (i, t) in self.grid().times().iter().enumerate() {
            let x = self.planar(i);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(*t),
                fmt_f64(self.angle(i).value()),
                fmt_f64(self.lifted(i)),
                fmt_f64(self.driver[i]),
                fmt_f64(x[0]),
                fmt_f64(x[1])
            )?;
        }
        Ok(())
    }
}

/// Correlation coefficient of `(ΔB, Δθ)` over `[t0, t1]`.
pub fn step_correlation(t0: f64, t1: f64) -> f64 {
    let c = 2.0 * (t1.sqrt() - t0.sqrt());
    c / ((t1 - t0) * (t1 / t0).ln()).sqrt()
}

fn tangential_steps(rng: &mut SimRng, grid: &TimeGrid) -> (Vec<f64>, Vec<f64>) {
    let mut cum = Vec::with_capacity(grid.len());
    let mut driver = Vec::with_capacity(grid.len());
    let (mut theta, mut b) = (0.0, 0.0);
    cum.push(theta);
    driver.push(b);
    for w in grid.times().windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let v = (t1 / t0).ln();
        let c = 2.0 * (t1.sqrt() - t0.sqrt());
        let dt = t1 - t0;
        let d_theta = v.sqrt() * normal(rng);
        let residual = (dt - c * c / v).max(0.0);
        let d_b = c / v * d_theta + residual.sqrt() * normal(rng);
        theta += d_theta;
        b += d_b;
        cum.push(theta);
        driver.push(b);
    }
    (cum, driver)
}

/// Exact-in-law tangential motion on `grid` (which must start at `t0 > 0`).
///
/// The angle at `t0` is `theta0` when given and uniform otherwise; the
/// uniform draw is made either way so that the driving noise does not
/// depend on whether `theta0` was supplied.
pub fn simulate_tangential(
    seed: Seed,
    grid: &TimeGrid,
    theta0: Option<TorusAngle>,
) -> Result<PolarPath> {
    if grid.start() <= 0.0 {
        return domain(format!(
            "tangential motion is sampled from t0 > 0, got t0 = {}",
            grid.start()
        ));
    }
    let mut rng = seed.rng();
    let uniform = rng.random::<f64>() * std::f64::consts::TAU;
    let start = theta0.map_or(uniform, TorusAngle::value);
    let (cum, driver) = tangential_steps(&mut rng, grid);
    Ok(PolarPath {
        angle: AnglePath {
            grid: grid.clone(),
            start,
            cum,
        },
        driver,
    })
}

/// Circular Brownian motion on an arbitrary grid: lifted increments are
/// `N(0, Δs)`, the start is `start` or uniform.
pub fn circular_bm(seed: Seed, grid: &TimeGrid, start: Option<TorusAngle>) -> AnglePath {
    let mut rng = seed.rng();
    let uniform = rng.random::<f64>() * std::f64::consts::TAU;
    let start = start.map_or(uniform, TorusAngle::value);
    let mut cum = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    cum.push(acc);
    for ds in grid.steps() {
        acc += ds.sqrt() * normal(&mut rng);
        cum.push(acc);
    }
    AnglePath {
        grid: grid.clone(),
        start,
        cum,
    }
}

/// The grid `e^s` for `s` in `grid`; a uniform grid becomes a log grid.
pub fn exp_time_change(grid: &TimeGrid) -> Result<TimeGrid> {
    let times: Vec<f64> = grid.times().iter().map(|s| s.exp()).collect();
    if grid.kind() == GridKind::Uniform {
        let n = grid.len();
        make_log_like(times[0], times[n - 1], n)
    } else {
        TimeGrid::from_times(times)
    }
}

fn make_log_like(t0: f64, t1: f64, n: usize) -> Result<TimeGrid> {
    crate::grid::make_grid(GridKind::Log, t0, t1, n)
}

/// The angle of a tangential path read on the clock `s = ln t`.
pub fn circular_clock(path: &PolarPath) -> AnglePath {
    let times: Vec<f64> = path.grid().times().iter().map(|t| t.ln()).collect();
    let grid = TimeGrid::from_times(times).expect("ln is increasing");
    AnglePath {
        grid,
        ..path.angle.clone()
    }
}

/// Lifted reconstruction `θ_s + sum t_i^{-1/2} ΔB_i` over the grid points in
/// `[s, t]`, left-point.
pub fn reconstruct_lifted(
    theta_s: f64,
    grid: &TimeGrid,
    driver: &[f64],
    s: f64,
    t: f64,
) -> Result<f64> {
    if driver.len() != grid.len() {
        return argument("driver must carry one value per grid point");
    }
    if s > t {
        return argument(format!("reconstruction needs s <= t, got s = {s}, t = {t}"));
    }
    let i = grid
        .index_of(s)
        .ok_or_else(|| crate::Error::Argument(format!("s = {s} is not a grid point")))?;
    let j = grid
        .index_of(t)
        .ok_or_else(|| crate::Error::Argument(format!("t = {t} is not a grid point")))?;
    let times = grid.times();
    let mut theta = theta_s;
    for k in i..j {
        theta += (driver[k + 1] - driver[k]) / times[k].sqrt();
    }
    Ok(theta)
}

/// Angle at `t` rebuilt from the angle at `s` and the driver on `[s, t]`.
pub fn reconstruct_angle(
    theta_s: TorusAngle,
    grid: &TimeGrid,
    driver: &[f64],
    s: f64,
    t: f64,
) -> Result<TorusAngle> {
    reconstruct_lifted(theta_s.value(), grid, driver, s, t).map(TorusAngle::wrap)
}

/// Two solutions driven by identical Brownian increments whose initial
/// angles differ by `offset`.
pub fn shared_noise_pair(
    seed: Seed,
    grid: &TimeGrid,
    offset: TorusAngle,
) -> Result<(PolarPath, PolarPath)> {
    let first = simulate_tangential(seed, grid, None)?;
    let second = PolarPath {
        angle: first.angle.with_start(first.angle.start + offset.value()),
        driver: first.driver.clone(),
    };
    Ok((first, second))
}

/// Samples of `θ_{e^s}` with paired lifted increments over windows of the
/// circular clock.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleMarginal {
    pub s: f64,
    pub angles: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
    /// `increments[w][j]`: increment over window `w` in replica `j`.
    pub increments: Vec<Vec<f64>>,
}

/// Windows `(s - 1, s)`, `(s, s + 1)` and `(s + 1, s + 2)`.
pub fn default_windows(s: f64) -> Vec<(f64, f64)> {
    vec![(s - 1.0, s), (s, s + 1.0), (s + 1.0, s + 2.0)]
}

/// `n` independent draws of the angle at time `e^s` together with the
/// lifted angle increments over `windows` (given in `s` units).
pub fn angle_marginal_sample(
    seed: Seed,
    s: f64,
    n: usize,
    windows: &[(f64, f64)],
) -> Result<AngleMarginal> {
    if n == 0 {
        return argument("angle_marginal_sample needs n >= 1");
    }
    if let Some(w) = windows.iter().find(|w| !(w.0 < w.1)) {
        return argument(format!("window ({}, {}) is empty", w.0, w.1));
    }
    let mut points: Vec<f64> = std::iter::once(s)
        .chain(windows.iter().flat_map(|w| [w.0, w.1]))
        .collect();
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup();
    let times: Vec<f64> = points.iter().map(|p| p.exp()).collect();
    let grid = if times.len() >= 2 {
        TimeGrid::from_times(times)?
    } else {
        TimeGrid::from_times(vec![times[0], times[0] * std::f64::consts::E])?
    };
    let at = |x: f64| {
        points
            .iter()
            .position(|&p| p == x)
            .expect("breakpoint present")
    };
    let si = at(s);
    let idx: Vec<(usize, usize)> = windows.iter().map(|w| (at(w.0), at(w.1))).collect();
    let paths = crate::montecarlo::replicate(seed, n, |sd| simulate_tangential(sd, &grid, None));
    let mut angles = Vec::with_capacity(n);
    let mut increments = vec![Vec::with_capacity(n); windows.len()];
    for p in paths {
        let p = p?;
        angles.push(p.angle(si).value());
        for (w, &(a, b)) in idx.iter().enumerate() {
            increments[w].push(p.angle.increment(a, b));
        }
    }
    Ok(AngleMarginal {
        s,
        angles,
        windows: windows.to_vec(),
        increments,
    })
}
