//! Sample-time grids.

use crate::error::{argument, domain, Result};

/// Spacing rule a grid was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Constant differences.
    Uniform,
    /// Constant ratios `t[i+1] / t[i]`; the natural clock for `a(s) = e^s`.
    Log,
    /// Arbitrary strictly increasing times.
    Custom,
}

/// Strictly increasing, finite sample times with at least two points.
///
/// Endpoints are stored exactly as requested; interior points are computed
/// from the endpoints directly rather than by accumulating steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    kind: GridKind,
}

/// Build a grid of `n` points from `t0` to `t1`.
pub fn make_grid(kind: GridKind, t0: f64, t1: f64, n: usize) -> Result<TimeGrid> {
    if n < 2 {
        return argument(format!("grid needs at least 2 points, got {n}"));
    }
    if !t0.is_finite() || !t1.is_finite() {
        return argument("grid endpoints must be finite");
    }
    if t1 <= t0 {
        return argument(format!("grid end {t1} must exceed start {t0}"));
    }
    let last = (n - 1) as f64;
    let times = match kind {
        GridKind::Uniform => {
            let span = t1 - t0;
            (0..n)
                .map(|i| match i {
                    0 => t0,
                    i if i == n - 1 => t1,
                    i => t0 + span * (i as f64 / last),
                })
                .collect()
        }
        GridKind::Log => {
            if t0 <= 0.0 {
                return domain(format!("log grid needs t0 > 0, got {t0}"));
            }
            let log_ratio = (t1 / t0).ln();
            (0..n)
                .map(|i| match i {
                    0 => t0,
                    i if i == n - 1 => t1,
                    i => t0 * (log_ratio * (i as f64 / last)).exp(),
                })
                .collect()
        }
        GridKind::Custom => return argument("custom grids are built with TimeGrid::from_times"),
    };
    let grid = TimeGrid { times, kind };
    grid.validate()?;
    Ok(grid)
}

impl TimeGrid {
    /// Wrap explicit sample times.
    pub fn from_times(times: Vec<f64>) -> Result<TimeGrid> {
        let grid = TimeGrid {
            times,
            kind: GridKind::Custom,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// A log grid whose step ratio is exactly `4^(1/steps_per_quarter)`,
    /// running from `4^lo` to `4^hi`.
    ///
    /// Scaling time by any integer power of `4^(1/steps_per_quarter)` maps
    /// the grid onto itself, which keeps grid-level statistics of
    /// self-similar processes scale invariant.
    pub fn quartic_log(lo: i32, hi: i32, steps_per_quarter: usize) -> Result<TimeGrid> {
        if hi <= lo || steps_per_quarter == 0 {
            return argument("quartic_log needs hi > lo and a positive step count");
        }
        let n = (hi - lo) as usize * steps_per_quarter + 1;
        let times = (0..n)
            .map(|i| 4f64.powf(lo as f64 + i as f64 / steps_per_quarter as f64))
            .collect();
        let grid = TimeGrid {
            times,
            kind: GridKind::Log,
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if self.times.len() < 2 {
            return argument("grid needs at least 2 points");
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return argument("grid times must be finite");
        }
        if let Some(w) = self.times.windows(2).find(|w| w[1] <= w[0]) {
            return argument(format!(
                "grid not strictly increasing at {} -> {}",
                w[0], w[1]
            ));
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Step sizes `t[i+1] - t[i]`.
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    /// Every `factor`-th point, keeping both endpoints when the length allows.
    pub fn coarsen(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 || !(self.len() - 1).is_multiple_of(factor) {
            return argument(format!("cannot coarsen {} points by {factor}", self.len()));
        }
        let times: Vec<f64> = self.times.iter().copied().step_by(factor).collect();
        let grid = TimeGrid {
            times,
            kind: self.kind,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Index of the grid point equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&x| x == t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn uniform_from_zero() {
        let g = make_grid(GridKind::Uniform, 0.0, 1.0, 3).unwrap();
        assert_eq!(g.times(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn log_grid_is_geometric() {
        let g = make_grid(GridKind::Log, 1.0, E * E, 3).unwrap();
        assert_eq!(g.start(), 1.0);
        assert_eq!(g.end(), E * E);
        assert!((g.times()[1] - E).abs() <= 4.0 * f64::EPSILON * E);
    }

    #[test]
    fn log_grid_rejects_nonpositive_start() {
        assert!(matches!(
            make_grid(GridKind::Log, 0.0, 1.0, 4),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(
            make_grid(GridKind::Uniform, 0.0, 1.0, 1),
            Err(crate::Error::Argument(_))
        ));
        assert!(matches!(
            make_grid(GridKind::Uniform, 1.0, 1.0, 3),
            Err(crate::Error::Argument(_))
        ));
        assert!(TimeGrid::from_times(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::from_times(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn quartic_log_self_maps_under_quarter_scaling() {
        let g = TimeGrid::quartic_log(-3, 2, 8).unwrap();
        assert_eq!(g.start(), 4f64.powi(-3));
        assert_eq!(g.end(), 16.0);
        // multiplying by 1/4 shifts the grid by exactly 8 points
        for i in 8..g.len() {
            let scaled = g.times()[i] / 4.0;
            assert!((scaled - g.times()[i - 8]).abs() <= 1e-15 * scaled);
        }
    }

    #[test]
    fn coarsen_keeps_endpoints() {
        let g = make_grid(GridKind::Log, 1.0, 2.0, 9).unwrap();
        let c = g.coarsen(4).unwrap();
        assert_eq!(c.times(), &[g.times()[0], g.times()[4], g.times()[8]]);
        assert!(g.coarsen(3).is_err());
    }
}
