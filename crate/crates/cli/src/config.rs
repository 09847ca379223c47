//! Suite configuration.
//!
//! One TOML file drives a whole run. Every block has defaults, unknown keys
//! are rejected, and [`RunConfig::validate`] checks all numeric parameters
//! before anything is simulated.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Environment variable that overrides `seed`.
pub const SEED_ENV: &str = "SUITE_SEED";

/// A configuration that could not be read or is out of range.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
pub enum Format {
    #[serde(rename = "csv")]
    Csv,
    #[default]
    #[serde(rename = "csv+svg")]
    CsvSvg,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; the command line may override it.
    pub output: Option<PathBuf>,
    pub format: Format,
    pub radius: RadiusBlock,
    pub angle: AngleBlock,
    pub shared_noise: SharedNoiseBlock,
    pub reconstruction: ReconstructionBlock,
    pub bessel: BesselBlock,
    pub origin_return: OriginReturnBlock,
    pub hitting: HittingBlock,
    pub scaling: ScalingBlock,
    pub tsirelson: TsirelsonBlock,
    pub tanaka: TanakaBlock,
    pub control: ControlBlock,
    pub figure: FigureBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20_240_601,
            output: None,
            format: Format::default(),
            radius: Default::default(),
            angle: Default::default(),
            shared_noise: Default::default(),
            reconstruction: Default::default(),
            bessel: Default::default(),
            origin_return: Default::default(),
            hitting: Default::default(),
            scaling: Default::default(),
            tsirelson: Default::default(),
            tanaka: Default::default(),
            control: Default::default(),
            figure: Default::default(),
        }
    }
}

/// Exact-radius check on tangential paths.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiusBlock {
    pub paths: usize,
    pub steps: usize,
    pub t0: f64,
    pub t1: f64,
    pub max_ulps: f64,
}

impl Default for RadiusBlock {
    fn default() -> Self {
        RadiusBlock {
            paths: 1000,
            steps: 1000,
            t0: 1e-4,
            t1: 10.0,
            max_ulps: 4.0,
        }
    }
}

/// Marginal law of `θ_{e^s}` and its independence from later increments.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngleBlock {
    pub s_values: Vec<f64>,
    pub n: usize,
    pub significance: f64,
    /// `s` whose default windows are used for the independence checks.
    pub independence_s: f64,
    /// Uniformity paths start from angle 0 at time `e^(s - burn_in)`.
    pub burn_in: f64,
}

impl Default for AngleBlock {
    fn default() -> Self {
        AngleBlock {
            s_values: vec![-1.0, 0.0, 1.0],
            n: 10_000,
            significance: 0.01,
            independence_s: 0.0,
            burn_in: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SharedNoiseBlock {
    pub steps: usize,
    pub t0: f64,
    pub t1: f64,
    pub offsets: Vec<f64>,
}

impl Default for SharedNoiseBlock {
    fn default() -> Self {
        SharedNoiseBlock {
            steps: 1000,
            t0: 0.01,
            t1: 100.0,
            offsets: vec![FRAC_PI_2, PI],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionBlock {
    pub replicas: usize,
    /// Steps on the fine grid; the coarse grid has a quarter of them.
    pub fine_steps: usize,
    pub s: f64,
    pub t: f64,
    pub max_ratio: f64,
}

impl Default for ReconstructionBlock {
    fn default() -> Self {
        ReconstructionBlock {
            replicas: 1000,
            fine_steps: 256,
            s: 1.0,
            t: std::f64::consts::E,
            max_ratio: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BesselBlock {
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    pub n: usize,
}

impl Default for BesselBlock {
    fn default() -> Self {
        BesselBlock {
            lambdas: vec![0.25, 0.5, 0.9],
            times: vec![0.5, 1.0],
            n: 100_000,
        }
    }
}

/// Near-origin visit frequencies on both sides of the critical λ.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OriginReturnBlock {
    pub polar_lambda: f64,
    pub recurrent_lambda: f64,
    pub eps: f64,
    pub r0: f64,
    pub n: usize,
    pub kappa: f64,
    pub polar_horizon: f64,
    pub recurrent_horizon: f64,
    /// Visit frequency must stay at or below this for the polar λ.
    pub polar_max: f64,
    /// Visit frequency must reach at least this for the recurrent λ.
    pub recurrent_min: f64,
    pub sweep_lambdas: Vec<f64>,
    pub sweep_eps: Vec<f64>,
    pub sweep_horizon: f64,
    pub sweep_n: usize,
}

impl Default for OriginReturnBlock {
    fn default() -> Self {
        OriginReturnBlock {
            polar_lambda: 0.5,
            recurrent_lambda: 0.9,
            eps: 1e-3,
            r0: 1.0,
            n: 10_000,
            kappa: 0.01,
            polar_horizon: 10.0,
            // at T = 10 only about 62% of λ = 0.9 paths reach 0; see README
            recurrent_horizon: 5000.0,
            polar_max: 0.05,
            recurrent_min: 0.95,
            sweep_lambdas: vec![0.5, 0.6, FRAC_1_SQRT_2, 0.75, 0.9],
            sweep_eps: vec![1e-2, 1e-3],
            sweep_horizon: 10.0,
            sweep_n: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HittingBlock {
    pub lambda: f64,
    pub rho: f64,
    pub n: usize,
    pub levels: usize,
    pub grid_lo: i32,
    pub grid_hi: i32,
    pub steps_per_quarter: usize,
}

impl Default for HittingBlock {
    fn default() -> Self {
        HittingBlock {
            lambda: 0.5,
            rho: 1.0,
            n: 10_000,
            levels: 4,
            grid_lo: -8,
            grid_hi: 4,
            steps_per_quarter: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingBlock {
    pub lambda: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub alpha: f64,
    pub n: usize,
    /// Outer radius of the negative-control shell `(rho0, control_rho1)`.
    pub control_rho1: f64,
}

impl Default for ScalingBlock {
    fn default() -> Self {
        ScalingBlock {
            lambda: 0.5,
            rho0: 0.5,
            rho1: 1.0,
            alpha: 0.25,
            n: 10_000,
            control_rho1: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TsirelsonBlock {
    pub depth: usize,
    pub substeps: usize,
    pub n: usize,
}

impl Default for TsirelsonBlock {
    fn default() -> Self {
        TsirelsonBlock {
            depth: 8,
            substeps: 16,
            n: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TanakaBlock {
    pub steps: usize,
    pub t1: f64,
    pub n: usize,
}

impl Default for TanakaBlock {
    fn default() -> Self {
        TanakaBlock {
            steps: 256,
            t1: 1.0,
            n: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlBlock {
    /// Exit radius for the closed-form comparisons.
    pub eta: f64,
    /// Replicas for the tangential closed-form comparisons.
    pub tangential_n: usize,
    pub dpp_eta: f64,
    pub dpp_r: f64,
    pub dpp_n: usize,
    pub lambdas: Vec<f64>,
    pub lambda_n: usize,
    pub radial_n: usize,
}

impl Default for ControlBlock {
    fn default() -> Self {
        ControlBlock {
            eta: 1.0,
            tangential_n: 1000,
            dpp_eta: 0.5,
            dpp_r: 1.0,
            dpp_n: 10_000,
            lambdas: vec![0.5, 0.25, 0.1],
            lambda_n: 10_000,
            radial_n: 10_000,
        }
    }
}

/// The trajectory and radius figures.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigureBlock {
    pub eta: f64,
    pub steps: usize,
}

impl Default for FigureBlock {
    fn default() -> Self {
        FigureBlock {
            eta: 1.0,
            steps: 2000,
        }
    }
}

impl RunConfig {
    /// Parse TOML text. Missing keys take their defaults.
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text)
            .map_err(|e| ConfigError(format!("config parse error: {}", e.message())))
    }

    /// Read, parse, apply `SUITE_SEED` and validate.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        cfg.apply_env_seed(std::env::var(SEED_ENV).ok().as_deref())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replace the seed with the value of `SUITE_SEED`, if set.
    pub fn apply_env_seed(&mut self, value: Option<&str>) -> Result<(), ConfigError> {
        if let Some(v) = value {
            self.seed = v.trim().parse().map_err(|_| {
                ConfigError(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))
            })?;
        }
        Ok(())
    }

    /// Check every parameter against the preconditions of the operation it
    /// feeds. The message names the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.radius;
        count("radius.paths", r.paths)?;
        steps("radius.steps", r.steps)?;
        positive("radius.t0", r.t0)?;
        above("radius.t1", r.t1, r.t0, "radius.t0")?;
        nonnegative("radius.max_ulps", r.max_ulps)?;

        let a = &self.angle;
        nonempty("angle.s_values", a.s_values.len())?;
        for (i, s) in a.s_values.iter().enumerate() {
            finite(&format!("angle.s_values[{i}]"), *s)?;
        }
        at_least("angle.n", a.n, 8)?;
        open_unit("angle.significance", a.significance)?;
        finite("angle.independence_s", a.independence_s)?;
        positive("angle.burn_in", a.burn_in)?;

        let s = &self.shared_noise;
        steps("shared_noise.steps", s.steps)?;
        positive("shared_noise.t0", s.t0)?;
        above("shared_noise.t1", s.t1, s.t0, "shared_noise.t0")?;
        for (i, o) in s.offsets.iter().enumerate() {
            finite(&format!("shared_noise.offsets[{i}]"), *o)?;
        }

        let c = &self.reconstruction;
        count("reconstruction.replicas", c.replicas)?;
        if c.fine_steps < 4 || !c.fine_steps.is_multiple_of(4) {
            return invalid(format!(
                "reconstruction.fine_steps must be a positive multiple of 4, got {}",
                c.fine_steps
            ));
        }
        positive("reconstruction.s", c.s)?;
        above("reconstruction.t", c.t, c.s, "reconstruction.s")?;
        positive("reconstruction.max_ratio", c.max_ratio)?;

        let b = &self.bessel;
        for (i, l) in b.lambdas.iter().enumerate() {
            lambda(&format!("bessel.lambdas[{i}]"), *l)?;
        }
        for (i, t) in b.times.iter().enumerate() {
            positive(&format!("bessel.times[{i}]"), *t)?;
        }
        at_least("bessel.n", b.n, 2)?;

        let o = &self.origin_return;
        lambda("origin_return.polar_lambda", o.polar_lambda)?;
        lambda("origin_return.recurrent_lambda", o.recurrent_lambda)?;
        if o.polar_lambda > FRAC_1_SQRT_2 {
            return invalid(format!(
                "origin_return.polar_lambda must not exceed sqrt(2)/2, got {}",
                o.polar_lambda
            ));
        }
        if o.recurrent_lambda <= FRAC_1_SQRT_2 {
            return invalid(format!(
                "origin_return.recurrent_lambda must exceed sqrt(2)/2, got {}",
                o.recurrent_lambda
            ));
        }
        epsilon("origin_return.eps", o.eps, o.r0)?;
        positive("origin_return.r0", o.r0)?;
        at_least("origin_return.n", o.n, 2)?;
        open_unit("origin_return.kappa", o.kappa)?;
        positive("origin_return.polar_horizon", o.polar_horizon)?;
        positive("origin_return.recurrent_horizon", o.recurrent_horizon)?;
        unit("origin_return.polar_max", o.polar_max)?;
        unit("origin_return.recurrent_min", o.recurrent_min)?;
        for (i, l) in o.sweep_lambdas.iter().enumerate() {
            lambda(&format!("origin_return.sweep_lambdas[{i}]"), *l)?;
        }
        nonempty("origin_return.sweep_eps", o.sweep_eps.len())?;
        for (i, e) in o.sweep_eps.iter().enumerate() {
            epsilon(&format!("origin_return.sweep_eps[{i}]"), *e, o.r0)?;
        }
        positive("origin_return.sweep_horizon", o.sweep_horizon)?;
        at_least("origin_return.sweep_n", o.sweep_n, 2)?;

        let h = &self.hitting;
        lambda("hitting.lambda", h.lambda)?;
        if h.lambda >= FRAC_1_SQRT_2 {
            return invalid(format!(
                "hitting.lambda must lie below sqrt(2)/2, got {}",
                h.lambda
            ));
        }
        positive("hitting.rho", h.rho)?;
        at_least("hitting.n", h.n, 8)?;
        at_least("hitting.levels", h.levels, 2)?;
        grid_range("hitting", h.grid_lo, h.grid_hi, h.steps_per_quarter)?;

        let sc = &self.scaling;
        lambda("scaling.lambda", sc.lambda)?;
        positive("scaling.rho0", sc.rho0)?;
        above("scaling.rho1", sc.rho1, sc.rho0, "scaling.rho0")?;
        positive("scaling.alpha", sc.alpha)?;
        at_least("scaling.n", sc.n, 2)?;
        above(
            "scaling.control_rho1",
            sc.control_rho1,
            sc.rho0,
            "scaling.rho0",
        )?;

        let ts = &self.tsirelson;
        at_least("tsirelson.depth", ts.depth, 1)?;
        if ts.depth > 60 {
            return invalid(format!(
                "tsirelson.depth must be at most 60, got {}",
                ts.depth
            ));
        }
        at_least("tsirelson.substeps", ts.substeps, 1)?;
        at_least("tsirelson.n", ts.n, 8)?;

        let ta = &self.tanaka;
        steps("tanaka.steps", ta.steps)?;
        positive("tanaka.t1", ta.t1)?;
        at_least("tanaka.n", ta.n, 2)?;

        let ct = &self.control;
        positive("control.eta", ct.eta)?;
        at_least("control.tangential_n", ct.tangential_n, 2)?;
        positive("control.dpp_eta", ct.dpp_eta)?;
        if !(ct.dpp_r >= ct.dpp_eta) || !ct.dpp_r.is_finite() {
            return invalid(format!(
                "control.dpp_r must be at least control.dpp_eta, got {}",
                ct.dpp_r
            ));
        }
        at_least("control.dpp_n", ct.dpp_n, 2)?;
        for (i, l) in ct.lambdas.iter().enumerate() {
            lambda(&format!("control.lambdas[{i}]"), *l)?;
        }
        if ct.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("control.lambdas must be strictly decreasing");
        }
        at_least("control.lambda_n", ct.lambda_n, 2)?;
        at_least("control.radial_n", ct.radial_n, 2)?;

        positive("figure.eta", self.figure.eta)?;
        steps("figure.steps", self.figure.steps)?;
        if !self.figure.steps.is_multiple_of(2) {
            return invalid(format!(
                "figure.steps must be even, got {}",
                self.figure.steps
            ));
        }
        Ok(())
    }
}

fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{key} must be finite, got {v}"))
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{key} must be positive and finite, got {v}"))
    }
}

fn nonnegative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{key} must be nonnegative, got {v}"))
    }
}

fn above(key: &str, v: f64, bound: f64, other: &str) -> Result<(), ConfigError> {
    if v > bound && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{key} must exceed {other} = {bound}, got {v}"))
    }
}

fn lambda(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        invalid(format!("{key} must lie in (0, 1), got {v}"))
    }
}

fn open_unit(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        invalid(format!("{key} must lie in (0, 1), got {v}"))
    }
}

fn unit(key: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        invalid(format!("{key} must lie in [0, 1], got {v}"))
    }
}

fn epsilon(key: &str, v: f64, r0: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < r0 {
        Ok(())
    } else {
        invalid(format!("{key} must lie in (0, r0 = {r0}), got {v}"))
    }
}

fn count(key: &str, v: usize) -> Result<(), ConfigError> {
    at_least(key, v, 1)
}

fn steps(key: &str, v: usize) -> Result<(), ConfigError> {
    at_least(key, v, 1)
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        invalid(format!("{key} must be at least {min}, got {v}"))
    }
}

fn nonempty(key: &str, len: usize) -> Result<(), ConfigError> {
    if len > 0 {
        Ok(())
    } else {
        invalid(format!("{key} must not be empty"))
    }
}

fn grid_range(block: &str, lo: i32, hi: i32, m: usize) -> Result<(), ConfigError> {
    if lo >= hi {
        return invalid(format!(
            "{block}.grid_hi must exceed {block}.grid_lo, got {lo}..{hi}"
        ));
    }
    at_least(&format!("{block}.steps_per_quarter"), m, 1)
}
