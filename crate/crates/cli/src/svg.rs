//! Minimal SVG output for trajectories and time series.
//!
//! Coordinates are printed with a fixed number of decimals and nothing
//! depends on the clock or environment, so equal input gives equal bytes.

use std::fmt::Write as _;
use std::io::{self, Write};

use tanlab_core::{Error, Path, Result};

const SIZE: f64 = 400.0;
const MARGIN: f64 = 20.0;

fn header(out: &mut String) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    ));
}

fn polyline(out: &mut String, pts: impl Iterator<Item = (f64, f64)>) {
    out.push_str("<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.6\" points=\"");
    for (i, (x, y)) in pts.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{x:.3},{y:.3}").unwrap();
    }
    out.push_str("\"/>\n");
}

fn finite_points(points: &[[f64; 2]]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Argument("cannot plot an empty path".into()));
    }
    if points
        .iter()
        .any(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::Argument("cannot plot non-finite points".into()));
    }
    Ok(())
}

/// Planar trajectory in a square frame centred on the origin, with an
/// optional circle of radius `circle`.
pub fn scatter_svg(points: &[[f64; 2]], circle: Option<f64>) -> Result<String> {
    finite_points(points)?;
    if let Some(r) = circle {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Argument(format!(
                "circle radius must be positive, got {r}"
            )));
        }
    }
    let reach = points
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(circle.unwrap_or(0.0), f64::max);
    let reach = if reach > 0.0 { reach } else { 1.0 };
    let half = SIZE / 2.0;
    let scale = (half - MARGIN) / reach;
    let mut s = String::new();
    header(&mut s);
    s.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{half}\" x2=\"{}\" y2=\"{half}\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n",
        SIZE - MARGIN
    ));
    s.push_str(&format!(
        "<line x1=\"{half}\" y1=\"{MARGIN}\" x2=\"{half}\" y2=\"{}\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n",
        SIZE - MARGIN
    ));
    if let Some(r) = circle {
        s.push_str(&format!(
            "<circle cx=\"{half}\" cy=\"{half}\" r=\"{:.3}\" fill=\"none\" stroke=\"#cc0000\" stroke-width=\"0.8\"/>\n",
            r * scale
        ));
    }
    polyline(
        &mut s,
        points
            .iter()
            .map(|p| (half + scale * p[0], half - scale * p[1])),
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Line chart of `ys` against `xs` with axes starting at zero when the data
/// are nonnegative.
pub fn line_svg(xs: &[f64], ys: &[f64]) -> Result<String> {
    if xs.len() != ys.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} times, {} values",
            xs.len(),
            ys.len()
        )));
    }
    let pts: Vec<[f64; 2]> = xs.iter().zip(ys).map(|(&x, &y)| [x, y]).collect();
    finite_points(&pts)?;
    let (x_lo, x_hi) = bounds(xs);
    let (y_lo, y_hi) = bounds(ys);
    let inner = SIZE - 2.0 * MARGIN;
    let sx = inner / (x_hi - x_lo);
    let sy = inner / (y_hi - y_lo);
    let mut s = String::new();
    header(&mut s);
    s.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{inner}\" height=\"{inner}\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n"
    ));
    polyline(
        &mut s,
        pts.iter().map(|p| {
            (
                MARGIN + sx * (p[0] - x_lo),
                SIZE - MARGIN - sy * (p[1] - y_lo),
            )
        }),
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

/// Write the trajectory of a planar path, with an optional exit circle.
pub fn emit_scatter<W: Write>(path: &Path, circle: Option<f64>, mut out: W) -> Result<()> {
    let svg = scatter_svg(path.planar_values()?, circle)?;
    out.write_all(svg.as_bytes()).map_err(io_error)
}

/// Write `|X_t|` against `t` for a planar path.
pub fn emit_radius<W: Write>(path: &Path, mut out: W) -> Result<()> {
    let r: Vec<f64> = path
        .planar_values()?
        .iter()
        .map(|p| p[0].hypot(p[1]))
        .collect();
    let svg = line_svg(path.times(), &r)?;
    out.write_all(svg.as_bytes()).map_err(io_error)
}

pub(crate) fn io_error(e: io::Error) -> Error {
    Error::Argument(format!("write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points_make_one_polyline() {
        let s = scatter_svg(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], None).unwrap();
        assert_eq!(s.matches("<polyline").count(), 1);
        let pts = s
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 3);
        assert!(!s.contains("<circle"));
    }

    #[test]
    fn circle_is_drawn_when_given() {
        let s = scatter_svg(&[[0.0, 0.0], [0.5, 0.5]], Some(1.0)).unwrap();
        assert_eq!(s.matches("<circle").count(), 1);
        assert!(s.contains("r=\"180.000\""));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(scatter_svg(&[], None).is_err());
        assert!(line_svg(&[], &[]).is_err());
        assert!(line_svg(&[1.0], &[]).is_err());
        assert!(scatter_svg(&[[f64::NAN, 0.0]], None).is_err());
        assert!(scatter_svg(&[[0.0, 0.0]], Some(0.0)).is_err());
    }

    #[test]
    fn output_is_repeatable() {
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|i| [(i as f64).cos(), (i as f64).sin()])
            .collect();
        assert_eq!(
            scatter_svg(&pts, Some(1.0)).unwrap(),
            scatter_svg(&pts, Some(1.0)).unwrap()
        );
    }

    #[test]
    fn single_point_and_flat_series() {
        assert!(scatter_svg(&[[0.0, 0.0]], None)
            .unwrap()
            .contains("200.000,200.000"));
        line_svg(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
    }
}
