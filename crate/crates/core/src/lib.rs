//! Simulation and statistical verification for stochastic differential
//! equations that admit weak but no strong solutions.
//!
//! The crate builds exact-in-law sample paths of tangential motion (a planar
//! martingale whose radius is the deterministic curve `sqrt(t)`), of the
//! λ-family of approximating SDEs whose squared radius is a squared Bessel
//! process, and of the classical Tanaka and Tsirelson equations. Each
//! simulator is paired with the distributional checks that witness the
//! absence of a strong solution: uniformity of the angle, independence from
//! the driving noise, reconstruction of the filtration from the noise plus
//! one angle, and the cost identities of the associated control problem.
//!
//! Modules:
//!
//! - [`rng`], [`grid`], [`path`], [`brownian`]: seeded sampling on time grids,
//!   Itô sums and quadratic variation.
//! - [`tangential`]: the tangential-motion SDE via its polar representation.
//! - [`lambda`]: the λ-parametrised family, hitting times and the zero-one law.
//! - [`classics`]: Tanaka's and Tsirelson's equations.
//! - [`stats`]: torus characteristic functions and the test battery.
//! - [`control`]: Monte Carlo and closed-form costs of control strategies.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian;
pub mod classics;
pub mod control;
pub mod error;
pub mod grid;
pub mod lambda;
pub mod montecarlo;
pub mod path;
pub mod rng;
pub mod stats;
pub mod tangential;
pub mod torus;

pub use error::{Error, Result};
pub use grid::{make_grid, GridKind, TimeGrid};
pub use path::{Path, PathValues};
pub use rng::Seed;
pub use stats::{TestReport, TorusSample};
pub use torus::TorusAngle;
