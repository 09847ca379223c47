//! Points of the circle `R / 2πZ`.

use std::f64::consts::{PI, TAU};
use std::fmt;

/// Representative of an angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TorusAngle(f64);

impl TorusAngle {
    pub const ZERO: TorusAngle = TorusAngle(0.0);

    /// Wrap any finite real onto `[0, 2π)`.
    pub fn wrap(x: f64) -> TorusAngle {
        TorusAngle(wrap(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Shortest signed lift of `self - other`, in `(-π, π]`.
    pub fn signed_diff(self, other: TorusAngle) -> f64 {
        centered(self.0 - other.0)
    }
}

impl fmt::Display for TorusAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `x mod 2π` in `[0, 2π)`.
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `x mod 2π` in `(-π, π]`.
pub fn centered(x: f64) -> f64 {
    let r = wrap(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_edge_cases() {
        assert_eq!(wrap(0.0), 0.0);
        assert_eq!(wrap(TAU), 0.0);
        assert_eq!(wrap(-1e-18), 0.0);
        assert!((wrap(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert_eq!(centered(PI), PI);
    }

    proptest! {
        #[test]
        fn wrap_lands_in_range(x in -1e6f64..1e6) {
            let w = wrap(x);
            prop_assert!((0.0..TAU).contains(&w));
            let k = ((x - w) / TAU).round();
            prop_assert!((x - w - k * TAU).abs() < 1e-9);
        }

        #[test]
        fn signed_diff_is_antisymmetric(a in 0.0f64..TAU, b in 0.0f64..TAU) {
            let d = TorusAngle::wrap(a).signed_diff(TorusAngle::wrap(b));
            prop_assert!(d > -PI - 1e-12 && d <= PI + 1e-12);
            prop_assert!((wrap(b + d) - wrap(a)).abs() < 1e-9 || (wrap(b + d) - wrap(a)).abs() > TAU - 1e-9);
        }
    }
}
