//! Tanaka's equation `dX = sign(X) dW` and Tsirelson's equation
//! `dX = b(t, X) dt + dW` with the fractional-part drift.

use std::io::{self, Write};

use rand::Rng;

use crate::brownian::{normal, sample_brownian};
use crate::error::{argument, Result};
use crate::grid::TimeGrid;
use crate::path::{fmt_f64, Path};
use crate::rng::Seed;

/// Value of `sign(X)` used on a step that starts exactly at `X = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroSign {
    /// `sign(0) = +1`.
    Plus,
    /// `sign(0) = sign(ΔX)`, so the step contributes `|ΔX|`. Unlike `Plus`
    /// this keeps `W` invariant under `X -> -X` on every step, including
    /// the first one out of the origin.
    #[default]
    FollowIncrement,
}

/// A Tanaka pair: the solution `X` and the Brownian motion `W = ∫ sign(X) dX`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanakaPath {
    pub x: Path,
    pub w: Path,
}

impl TanakaPath {
    /// CSV with header `t,x,w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,w")?;
        let x = self.x.scalar_values().expect("scalar");
        let w = self.w.scalar_values().expect("scalar");
        for (i, t) in self.x.times().iter().enumerate() {
            writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(x[i]), fmt_f64(w[i]))?;
        }
        Ok(())
    }
}

/// `W` with `ΔW_i = sign(X_{t_i}) ΔX_i`, starting at 0.
pub fn tanaka_driver(x: &Path, zero: ZeroSign) -> Result<Path> {
    let v = x.scalar_values()?;
    let mut w = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    w.push(acc);
    for pair in v.windows(2) {
        let dx = pair[1] - pair[0];
        let s = if pair[0] > 0.0 {
            1.0
        } else if pair[0] < 0.0 {
            -1.0
        } else {
            match zero {
                ZeroSign::Plus => 1.0,
                ZeroSign::FollowIncrement => dx.signum(),
            }
        };
        acc += s * dx;
        w.push(acc);
    }
    Path::scalar(x.grid().clone(), w)
}

/// Tanaka's equation on a grid starting at 0: `X` is a Brownian motion and
/// `W` is built from it.
pub fn simulate_tanaka(seed: Seed, grid: &TimeGrid, zero: ZeroSign) -> Result<TanakaPath> {
    if grid.start() != 0.0 {
        return argument(format!("Tanaka paths start at t = 0, got {}", grid.start()));
    }
    let x = sample_brownian(seed, grid);
    let w = tanaka_driver(&x, zero)?;
    Ok(TanakaPath { x, w })
}

/// `frac(dx / dt)` in `[0, 1)`.
pub fn fractional_part_update(dx: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return argument(format!("fractional part needs dt > 0, got {dt}"));
    }
    let q = dx / dt;
    let f = q - q.floor();
    // q slightly below an integer can round up to exactly 1
    Ok(if f >= 1.0 { 0.0 } else { f })
}

/// Interval endpoints `t_{-N} < ... < t_0 = 1` and the number of Euler
/// substeps per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TsirelsonConfig {
    times: Vec<f64>,
    substeps: usize,
}

impl TsirelsonConfig {
    /// Endpoints `2^{-N}, ..., 1/2, 1`.
    pub fn dyadic(depth: usize, substeps: usize) -> Result<TsirelsonConfig> {
        if depth == 0 {
            return argument("Tsirelson depth must be positive");
        }
        let times = (0..=depth)
            .map(|j| 2f64.powi(j as i32 - depth as i32))
            .collect();
        TsirelsonConfig::new(times, substeps)
    }

    /// Explicit increasing endpoints ending at 1.
    pub fn new(times: Vec<f64>, substeps: usize) -> Result<TsirelsonConfig> {
        if substeps == 0 {
            return argument("substeps must be at least 1");
        }
        if times.len() < 2 {
            return argument("need at least one interval");
        }
        if times[0] <= 0.0 {
            return argument(format!(
                "first interval time must be positive, got {}",
                times[0]
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return argument("interval times must be strictly increasing");
        }
        if *times.last().unwrap() != 1.0 {
            return argument("the last interval time must be exactly 1");
        }
        Ok(TsirelsonConfig { times, substeps })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn depth(&self) -> usize {
        self.times.len() - 1
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Refined grid: every interval split into `substeps` equal steps.
    pub fn grid(&self) -> TimeGrid {
        let s = self.substeps;
        let mut t = Vec::with_capacity(self.depth() * s + 1);
        for w in self.times.windows(2) {
            for j in 0..s {
                t.push(if j == 0 {
                    w[0]
                } else {
                    w[0] + (w[1] - w[0]) * (j as f64 / s as f64)
                });
            }
        }
        t.push(1.0);
        TimeGrid::from_times(t).expect("endpoints strictly increasing")
    }
}

/// A Tsirelson path on the refined grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TsirelsonPath {
    pub config: TsirelsonConfig,
    pub x: Path,
    pub w: Path,
    /// `b[j]`: drift level on interval `j`, i.e. on `(t_{j-N}, t_{j-N+1}]`.
    /// `b[0]` is the injected uniform level.
    pub b: Vec<f64>,
    /// Driver increments on the refined grid.
    pub dw: Vec<f64>,
}

impl TsirelsonPath {
    /// Drift level `b(t_k)` on `(t_{k-1}, t_k]`, for `k` in `-N+1 ..= 0`.
    pub fn b_at(&self, k: i32) -> Option<f64> {
        let n = self.config.depth() as i32;
        let j = k + n - 1;
        (0..n).contains(&j).then(|| self.b[j as usize])
    }

    /// CSV of the path, header `t,x,w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        TanakaPath {
            x: self.x.clone(),
            w: self.w.clone(),
        }
        .write_csv(&mut out)
    }

    /// Per-interval CSV, header `k,t_k,b_k`; row `k` holds the level on
    /// `(t_{k-1}, t_k]`.
    pub fn write_levels_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,t_k,b_k")?;
        let n = self.config.depth() as i32;
        for (j, b) in self.b.iter().enumerate() {
            let k = j as i32 - n + 1;
            writeln!(
                out,
                "{},{},{}",
                k,
                fmt_f64(self.config.times[j + 1]),
                fmt_f64(*b)
            )?;
        }
        Ok(())
    }
}

/// Forward recursion over intervals `first..`: start from `x_start` with
/// drift level `b_first`, integrate `ΔX = b Δt + ΔW` on the substeps, then
/// set the next level to `frac(ΔX_k / Δt_k)`.
///
/// Returns the refined `X` values from `t_first` on (including the start)
/// and the drift levels of the intervals visited.
pub fn tsirelson_forward(
    config: &TsirelsonConfig,
    first: usize,
    x_start: f64,
    b_first: f64,
    dw: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let depth = config.depth();
    if first >= depth {
        return argument(format!("first interval {first} out of range 0..{depth}"));
    }
    let s = config.substeps;
    if dw.len() != (depth - first) * s {
        return argument(format!(
            "expected {} driver increments, got {}",
            (depth - first) * s,
            dw.len()
        ));
    }
    if !(0.0..1.0).contains(&b_first) {
        return argument(format!("drift level must lie in [0, 1), got {b_first}"));
    }
    let grid = config.grid();
    let times = &grid.times()[first * s..];
    let mut xs = Vec::with_capacity(dw.len() + 1);
    let mut bs = Vec::with_capacity(depth - first);
    let mut x = x_start;
    let mut b = b_first;
    xs.push(x);
    for (k, chunk) in dw.chunks(s).enumerate() {
        bs.push(b);
        let x_left = x;
        for (j, dwj) in chunk.iter().enumerate() {
            let dt = times[k * s + j + 1] - times[k * s + j];
            x += b * dt + dwj;
            xs.push(x);
        }
        let big_dt = config.times[first + k + 1] - config.times[first + k];
        b = fractional_part_update(x - x_left, big_dt)?;
    }
    Ok((xs, bs))
}

/// Tsirelson's equation truncated at depth `N`: the first level is uniform
/// on `[0, 1)`, `X = 0` at `t_{-N}`.
pub fn simulate_tsirelson(seed: Seed, config: &TsirelsonConfig) -> Result<TsirelsonPath> {
    let mut rng = seed.rng();
    let b0: f64 = rng.random();
    let grid = config.grid();
    let dw: Vec<f64> = grid
        .steps()
        .map(|dt| dt.sqrt() * normal(&mut rng))
        .collect();
    let (xs, b) = tsirelson_forward(config, 0, 0.0, b0, &dw)?;
    let mut w = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    w.push(acc);
    for d in &dw {
        acc += d;
        w.push(acc);
    }
    Ok(TsirelsonPath {
        config: config.clone(),
        x: Path::scalar(grid.clone(), xs)?,
        w: Path::scalar(grid, w)?,
        b,
        dw,
    })
}

/// Rebuild `X` on `[t_{k-1}, 1]` from `X_{t_{k-1}}`, the level `b(t_k)` and
/// the driver increments on `[t_{k-1}, 1]`.
pub fn reconstruct_tsirelson(
    config: &TsirelsonConfig,
    k: i32,
    x_start: f64,
    b_k: f64,
    dw: &[f64],
) -> Result<Vec<f64>> {
    let n = config.depth() as i32;
    let first = k + n - 1;
    if !(0..n).contains(&first) {
        return argument(format!("interval index k = {k} out of range"));
    }
    Ok(tsirelson_forward(config, first as usize, x_start, b_k, dw)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::quadratic_variation;
    use crate::grid::{make_grid, GridKind};
    use crate::montecarlo::{correlation, replicate};
    use crate::stats::{ecf_independence, kuiper_test, TorusSample};
    use std::f64::consts::TAU;

    #[test]
    fn fractional_part_examples() {
        assert_eq!(fractional_part_update(0.75, 0.5).unwrap(), 0.5);
        assert_eq!(fractional_part_update(-0.25, 1.0).unwrap(), 0.75);
        assert_eq!(fractional_part_update(2.0, 1.0).unwrap(), 0.0);
        assert!(fractional_part_update(1.0, 0.0).is_err());
        assert!(fractional_part_update(1.0, -1.0).is_err());
        let tiny = fractional_part_update(-1e-18, 1.0).unwrap();
        assert!((0.0..1.0).contains(&tiny));
    }

    fn tanaka_grid() -> TimeGrid {
        make_grid(GridKind::Uniform, 0.0, 1.0, 1001).unwrap()
    }

    #[test]
    fn tanaka_qv_matches() {
        let p = simulate_tanaka(Seed::new(1, 0), &tanaka_grid(), ZeroSign::default()).unwrap();
        let qx = quadratic_variation(&p.x).unwrap();
        let qw = quadratic_variation(&p.w).unwrap();
        // |ΔW| = |ΔX| per step; the paths agree up to summation rounding
        for (a, b) in qx
            .scalar_values()
            .unwrap()
            .iter()
            .zip(qw.scalar_values().unwrap())
        {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn tanaka_flip_invariance() {
        let p =
            simulate_tanaka(Seed::new(2, 0), &tanaka_grid(), ZeroSign::FollowIncrement).unwrap();
        let neg: Vec<f64> = p.x.scalar_values().unwrap().iter().map(|x| -x).collect();
        let flipped = tanaka_driver(
            &Path::scalar(tanaka_grid(), neg.clone()).unwrap(),
            ZeroSign::FollowIncrement,
        )
        .unwrap();
        assert_eq!(flipped, p.w);
        // with sign(0) = +1 only the step leaving the origin differs
        let plus = tanaka_driver(&p.x, ZeroSign::Plus).unwrap();
        let plus_flipped =
            tanaka_driver(&Path::scalar(tanaka_grid(), neg).unwrap(), ZeroSign::Plus).unwrap();
        let (a, b) = (
            plus.scalar_values().unwrap(),
            plus_flipped.scalar_values().unwrap(),
        );
        let d0 = a[1] - b[1];
        for i in 1..a.len() {
            assert!((a[i] - b[i] - d0).abs() < 1e-12);
        }
    }

    #[test]
    fn tanaka_sign_is_independent_of_w() {
        let grid = make_grid(GridKind::Uniform, 0.0, 1.0, 257).unwrap();
        let pairs = replicate(Seed::new(3, 0), 10_000, |s| {
            let p = simulate_tanaka(s, &grid, ZeroSign::default()).unwrap();
            let x = *p.x.scalar_values().unwrap().last().unwrap();
            (x.signum(), *p.w.scalar_values().unwrap().last().unwrap())
        });
        let (s, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let n = s.len() as f64;
        assert!(correlation(&s, &w).abs() < 3.0 / n.sqrt());
        let plus = s.iter().filter(|&&v| v > 0.0).count() as f64 / n;
        assert!((plus - 0.5).abs() < 3.0 / (2.0 * n.sqrt()));
        let var = w.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn tanaka_needs_origin_grid() {
        let g = make_grid(GridKind::Uniform, 1.0, 2.0, 3).unwrap();
        assert!(simulate_tanaka(Seed::new(0, 0), &g, ZeroSign::Plus).is_err());
    }

    #[test]
    fn tsirelson_config_validation() {
        assert!(TsirelsonConfig::dyadic(0, 4).is_err());
        assert!(TsirelsonConfig::dyadic(3, 0).is_err());
        assert!(TsirelsonConfig::new(vec![0.5, 0.9], 2).is_err());
        assert!(TsirelsonConfig::new(vec![0.0, 1.0], 2).is_err());
        let c = TsirelsonConfig::dyadic(3, 4).unwrap();
        assert_eq!(c.times(), &[0.125, 0.25, 0.5, 1.0]);
        assert_eq!(c.grid().len(), 13);
        assert_eq!(*c.grid().times().last().unwrap(), 1.0);
    }

    #[test]
    fn tsirelson_levels_follow_previous_slope() {
        let c = TsirelsonConfig::dyadic(4, 8).unwrap();
        let p = simulate_tsirelson(Seed::new(4, 0), &c).unwrap();
        let x = p.x.scalar_values().unwrap();
        for j in 1..c.depth() {
            let dx = x[j * 8] - x[(j - 1) * 8];
            let dt = c.times()[j] - c.times()[j - 1];
            assert_eq!(p.b[j], fractional_part_update(dx, dt).unwrap());
        }
        assert_eq!(p.b_at(0), Some(p.b[3]));
        assert_eq!(p.b_at(-3), Some(p.b[0]));
        assert_eq!(p.b_at(1), None);
        assert_eq!(p.b_at(-4), None);
    }

    #[test]
    fn tsirelson_levels_are_uniform_and_independent() {
        let c = TsirelsonConfig::dyadic(8, 16).unwrap();
        let paths = replicate(Seed::new(5, 0), 10_000, |s| {
            simulate_tsirelson(s, &c).unwrap()
        });
        for k in -3..=0 {
            let b: Vec<f64> = paths.iter().map(|p| TAU * p.b_at(k).unwrap()).collect();
            assert!(
                kuiper_test(&TorusSample::new(b).unwrap(), 0.01)
                    .unwrap()
                    .pass,
                "k={k}"
            );
        }
        let b0: Vec<f64> = paths.iter().map(|p| TAU * p.b_at(0).unwrap()).collect();
        let w_last: Vec<f64> = paths
            .iter()
            .map(|p| {
                let w = p.w.scalar_values().unwrap();
                w[w.len() - 1] - w[w.len() - 17]
            })
            .collect();
        assert!(ecf_independence(&b0, &w_last, 1, 1).unwrap().pass);
    }

    #[test]
    fn tsirelson_reconstruction_is_exact() {
        let c = TsirelsonConfig::dyadic(6, 5).unwrap();
        let p = simulate_tsirelson(Seed::new(6, 0), &c).unwrap();
        let x = p.x.scalar_values().unwrap();
        for k in -5..=0 {
            let first = (k + 5) as usize;
            let start = first * 5;
            let rebuilt =
                reconstruct_tsirelson(&c, k, x[start], p.b_at(k).unwrap(), &p.dw[start..]).unwrap();
            assert_eq!(rebuilt.as_slice(), &x[start..]);
        }
        assert!(reconstruct_tsirelson(&c, 1, 0.0, 0.5, &p.dw).is_err());
        assert!(reconstruct_tsirelson(&c, 0, 0.0, 0.5, &p.dw[..3]).is_err());
    }

    #[test]
    fn tsirelson_csv_layouts() {
        let c = TsirelsonConfig::dyadic(2, 2).unwrap();
        let p = simulate_tsirelson(Seed::new(7, 0), &c).unwrap();
        let mut a = Vec::new();
        p.write_levels_csv(&mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("k,t_k,b_k\n-1,"));
        let mut b = Vec::new();
        p.write_csv(&mut b).unwrap();
        assert_eq!(String::from_utf8(b).unwrap().lines().count(), 6);
    }
}
