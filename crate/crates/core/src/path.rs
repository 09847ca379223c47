//! Sampled trajectories and their CSV form.

use std::io::{self, Write};

use crate::error::{argument, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum PathValues {
    Scalar(Vec<f64>),
    Planar(Vec<[f64; 2]>),
}

impl PathValues {
    pub fn len(&self) -> usize {
        match self {
            PathValues::Scalar(v) => v.len(),
            PathValues::Planar(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A trajectory sampled on a [`TimeGrid`]; one value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    values: PathValues,
}

impl Path {
    pub fn new(grid: TimeGrid, values: PathValues) -> Result<Path> {
        if values.len() != grid.len() {
            return argument(format!(
                "path has {} values for {} grid points",
                values.len(),
                grid.len()
            ));
        }
        Ok(Path { grid, values })
    }

    pub fn scalar(grid: TimeGrid, values: Vec<f64>) -> Result<Path> {
        Path::new(grid, PathValues::Scalar(values))
    }

    pub fn planar(grid: TimeGrid, values: Vec<[f64; 2]>) -> Result<Path> {
        Path::new(grid, PathValues::Planar(values))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &PathValues {
        &self.values
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    /// Scalar values, or an argument error for planar paths.
    pub fn scalar_values(&self) -> Result<&[f64]> {
        match &self.values {
            PathValues::Scalar(v) => Ok(v),
            PathValues::Planar(_) => argument("expected a scalar path"),
        }
    }

    pub fn planar_values(&self) -> Result<&[[f64; 2]]> {
        match &self.values {
            PathValues::Planar(v) => Ok(v),
            PathValues::Scalar(_) => argument("expected a planar path"),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Write `t,v1[,v2]` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        match &self.values {
            PathValues::Scalar(v) => {
                writeln!(out, "t,v1")?;
                for (t, x) in self.grid.times().iter().zip(v) {
                    writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*x))?;
                }
            }
            PathValues::Planar(v) => {
                writeln!(out, "t,v1,v2")?;
                for (t, x) in self.grid.times().iter().zip(v) {
                    writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(x[0]), fmt_f64(x[1]))?;
                }
            }
        }
        Ok(())
    }
}

/// Full-precision (17 significant digit) rendering used by every CSV writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridKind};

    #[test]
    fn length_must_match_grid() {
        let g = make_grid(GridKind::Uniform, 0.0, 1.0, 3).unwrap();
        assert!(Path::scalar(g.clone(), vec![0.0; 2]).is_err());
        assert!(Path::scalar(g, vec![0.0; 3]).is_ok());
    }

    #[test]
    fn csv_round_trips_exactly() {
        let g = make_grid(GridKind::Uniform, 0.0, 1.0, 3).unwrap();
        let vals = vec![
            [0.1, -1.0 / 3.0],
            [std::f64::consts::PI, 1e-300],
            [2.0, 5e17],
        ];
        let p = Path::planar(g.clone(), vals.clone()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,v1,v2"));
        for (i, line) in lines.enumerate() {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols, vec![g.times()[i], vals[i][0], vals[i][1]]);
        }
    }
}
