//! The λ-family `dX = |X|^{-1} (λ X + sqrt(1 - λ²) (-X2, X1)) dB`.
//!
//! The squared radius `Z = |X|²` solves `dZ = 2λ sqrt(Z) dB + dt`, a squared
//! Bessel process of dimension `δ = λ^{-2}` run on the clock `λ² t`, so its
//! transitions are sampled exactly as scaled noncentral chi-squares. The
//! driving noise is then recovered from the radius by inverting
//! `dR = λ dB + (1 - λ²) / (2R) dt`, and the angle follows
//! `dθ = sqrt(1 - λ²) (dB / R - λ dt / R²)` by an Euler step.
//!
//! The origin is polar exactly when `δ >= 2`, i.e. `λ <= sqrt(2)/2`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{argument, domain, Result};
use crate::grid::TimeGrid;
use crate::montecarlo::{replicate, MeanEstimate};
use crate::rng::{Seed, SimRng};
use crate::stats::{
    dyadic_decay, ecf_independence, ecf_magnitude, ecf_two_sample, kuiper_test, TestReport,
    TorusSample,
};
use crate::tangential::AnglePath;
use crate::torus::TorusAngle;

/// Radius below which the drift `1/R` is not evaluated.
pub const RADIUS_FLOOR: f64 = 1e-8;

/// `sqrt(2)/2`: the origin is polar for `λ` at or below this value.
pub const CRITICAL_LAMBDA: f64 = FRAC_1_SQRT_2;

/// Discrete-monitoring barrier shift constant `-ζ(1/2)/sqrt(2π)`.
pub const BRIDGE_BETA: f64 = 0.5825971579390106;

/// `λ` in `(0, 1)` and the Bessel dimension `δ = λ^{-2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaParams {
    lambda: f64,
    delta: f64,
}

impl LambdaParams {
    pub fn new(lambda: f64) -> Result<LambdaParams> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return argument(format!("lambda must lie in (0, 1), got {lambda}"));
        }
        Ok(LambdaParams {
            lambda,
            delta: 1.0 / (lambda * lambda),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Whether the origin is polar (`δ >= 2`).
    pub fn origin_is_polar(&self) -> bool {
        self.lambda <= CRITICAL_LAMBDA
    }
}

/// `h · χ²_δ(z / h)`: one exact BESQ(δ) transition over time `h` from `z`.
pub(crate) fn besq_sample(rng: &mut SimRng, z: f64, h: f64, delta: f64) -> f64 {
    let half_mu = 0.5 * z / h;
    if half_mu > 1e15 {
        // Poisson cannot represent the mixture index; the chi-square is
        // Gaussian to far below double precision here.
        let mean = delta + 2.0 * half_mu;
        let sd = (2.0 * (delta + 4.0 * half_mu)).sqrt();
        return h * (mean + sd * crate::brownian::normal(rng)).max(0.0);
    }
    let k = if half_mu > 0.0 {
        Poisson::new(half_mu)
            .expect("finite positive mean")
            .sample(rng)
    } else {
        0.0
    };
    let g: f64 = Gamma::new(0.5 * delta + k, 1.0)
        .expect("positive shape")
        .sample(rng);
    2.0 * h * g
}

/// One exact transition of the standard squared Bessel process
/// `dZ = 2 sqrt(Z) dW + δ dt` over `dt`: `Z ~ dt · χ²_δ(z / dt)`.
pub fn besq_step(seed: Seed, z: f64, dt: f64, delta: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return argument(format!("besq_step needs z >= 0, got {z}"));
    }
    if !(dt > 0.0) {
        return argument(format!("besq_step needs dt > 0, got {dt}"));
    }
    if !(delta > 0.0) {
        return argument(format!("besq_step needs delta > 0, got {delta}"));
    }
    Ok(besq_sample(&mut seed.rng(), z, dt, delta))
}

/// Initial condition of a λ-path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaStart {
    /// Start at the origin at time 0. If the grid starts later, the squared
    /// radius at the first grid time is drawn from the entrance law.
    Origin,
    /// Radius at the first grid time.
    Radius(f64),
}

/// Squared radius, radius and implied driver on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusPath {
    grid: TimeGrid,
    z: Vec<f64>,
    driver: Vec<f64>,
    flagged: Vec<bool>,
}

impl RadiusPath {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn r(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.sqrt()).collect()
    }

    /// Driving Brownian motion recovered from the radius, 0 at the start.
    pub fn implied_driver(&self) -> &[f64] {
        &self.driver
    }

    /// Per-step flags: `flagged[i]` marks the step `t_i -> t_{i+1}` that left
    /// from a radius below [`RADIUS_FLOOR`]; its driver and angle increments
    /// are set to zero.
    pub fn flagged_steps(&self) -> &[bool] {
        &self.flagged
    }

    pub fn flag_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

/// A simulated λ-path: radius data and lifted angle.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPath {
    pub radius: RadiusPath,
    pub angle: AnglePath,
}

impl LambdaPath {
    pub fn planar(&self, i: usize) -> [f64; 2] {
        let r = self.radius.z[i].sqrt();
        let (s, c) = self.angle.lifted(i).sin_cos();
        [r * c, r * s]
    }

    pub fn planar_path(&self) -> crate::path::Path {
        let values = (0..self.radius.z.len()).map(|i| self.planar(i)).collect();
        crate::path::Path::planar(self.radius.grid.clone(), values)
            .expect("one value per grid point")
    }

    /// CSV with header `t,z,r,b,theta,lifted,x1,x2`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        use crate::path::fmt_f64;
        writeln!(out, "t,z,r,b,theta,lifted,x1,x2")?;
        for (i, t) in self.radius.grid.times().iter().enumerate() {
            let x = self.planar(i);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(*t),
                fmt_f64(self.radius.z[i]),
                fmt_f64(self.radius.z[i].sqrt()),
                fmt_f64(self.radius.driver[i]),
                fmt_f64(self.angle.angle(i).value()),
                fmt_f64(self.angle.lifted(i)),
                fmt_f64(x[0]),
                fmt_f64(x[1])
            )?;
        }
        Ok(())
    }
}

/// Step-by-step λ dynamics along a grid.
pub(crate) struct LambdaWalker<'a> {
    lambda: f64,
    delta: f64,
    rot: f64,
    times: &'a [f64],
    rng: SimRng,
    pub i: usize,
    pub z: f64,
    pub theta: f64,
    pub b: f64,
    pub last_flagged: bool,
}

impl<'a> LambdaWalker<'a> {
    pub fn new(
        seed: Seed,
        params: LambdaParams,
        grid: &'a TimeGrid,
        start: LambdaStart,
        theta0: Option<TorusAngle>,
    ) -> Result<LambdaWalker<'a>> {
        let mut rng = seed.rng();
        let uniform = rng.random::<f64>() * TAU;
        let theta = theta0.map_or(uniform, TorusAngle::value);
        let t0 = grid.start();
        let z = match start {
            LambdaStart::Origin => {
                if t0 < 0.0 {
                    return argument(format!("a path from the origin needs t0 >= 0, got {t0}"));
                }
                if t0 > 0.0 {
                    besq_sample(
                        &mut rng,
                        0.0,
                        params.lambda * params.lambda * t0,
                        params.delta,
                    )
                } else {
                    0.0
                }
            }
            LambdaStart::Radius(r0) => {
                if !(r0 >= 0.0) || !r0.is_finite() {
                    return argument(format!("start radius must be finite and >= 0, got {r0}"));
                }
                r0 * r0
            }
        };
        Ok(LambdaWalker {
            lambda: params.lambda,
            delta: params.delta,
            rot: (1.0 - params.lambda * params.lambda).sqrt(),
            times: grid.times(),
            rng,
            i: 0,
            z,
            theta,
            b: 0.0,
            last_flagged: false,
        })
    }

    pub fn r(&self) -> f64 {
        self.z.sqrt()
    }

    pub fn at_end(&self) -> bool {
        self.i + 1 >= self.times.len()
    }

    /// Advance one grid step; false at the end of the grid.
    pub fn step(&mut self) -> bool {
        if self.at_end() {
            return false;
        }
        let dt = self.times[self.i + 1] - self.times[self.i];
        let lam = self.lambda;
        let r_old = self.z.sqrt();
        let z_new = besq_sample(&mut self.rng, self.z, lam * lam * dt, self.delta);
        let r_new = z_new.sqrt();
        if r_old < RADIUS_FLOOR {
            self.last_flagged = true;
        } else {
            self.last_flagged = false;
            let db = (r_new - r_old - (1.0 - lam * lam) * dt / (2.0 * r_old)) / lam;
            self.b += db;
            self.theta += self.rot * (db / r_old - lam * dt / (r_old * r_old));
        }
        self.z = z_new;
        self.i += 1;
        true
    }
}

/// Simulate a λ-path on `grid`.
///
/// The angle at the first grid time is `theta0` or uniform. With
/// [`LambdaStart::Origin`] on a grid starting at 0 the first step leaves the
/// origin and is flagged.
pub fn simulate_lambda(
    seed: Seed,
    params: LambdaParams,
    grid: &TimeGrid,
    start: LambdaStart,
    theta0: Option<TorusAngle>,
) -> Result<LambdaPath> {
    let mut w = LambdaWalker::new(seed, params, grid, start, theta0)?;
    let n = grid.len();
    let theta_start = w.theta;
    let (mut z, mut driver, mut cum, mut flagged) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    z.push(w.z);
    driver.push(0.0);
    cum.push(0.0);
    while w.step() {
        z.push(w.z);
        driver.push(w.b);
        cum.push(w.theta - theta_start);
        flagged.push(w.last_flagged);
    }
    Ok(LambdaPath {
        radius: RadiusPath {
            grid: grid.clone(),
            z,
            driver,
            flagged,
        },
        angle: AnglePath::from_parts(grid.clone(), theta_start, cum),
    })
}

/// First passage of the radius through a level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingSample {
    pub rho: f64,
    /// Grid time of the (possibly bridge-corrected) crossing.
    pub tau: f64,
    pub index: usize,
    pub angle: TorusAngle,
    pub lifted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hitting {
    Hit(HittingSample),
    /// The radius stayed below the level over the whole grid.
    NotHit,
}

impl Hitting {
    pub fn sample(&self) -> Option<&HittingSample> {
        match self {
            Hitting::Hit(h) => Some(h),
            Hitting::NotHit => None,
        }
    }
}

/// Level that the discretely monitored radius must reach at grid index `i`.
///
/// Without a bridge scale this is `rho`. With scale `σ` it is the shifted
/// barrier `rho - β σ sqrt(Δt)` that corrects for excursions above `rho`
/// between grid points.
fn barrier(times: &[f64], i: usize, rho: f64, bridge_scale: Option<f64>) -> f64 {
    match bridge_scale {
        Some(sigma) if i > 0 => rho - BRIDGE_BETA * sigma * (times[i] - times[i - 1]).sqrt(),
        _ => rho,
    }
}

/// Index of the first grid point where `r` reaches `rho` (or the shifted
/// barrier when a bridge scale is given).
pub fn first_crossing(
    times: &[f64],
    r: &[f64],
    rho: f64,
    bridge_scale: Option<f64>,
) -> Option<usize> {
    (0..r.len().min(times.len())).find(|&i| r[i] >= barrier(times, i, rho, bridge_scale))
}

/// First hitting of radius `rho` by a λ-path, optionally bridge-corrected
/// with local diffusion scale `λ`.
pub fn hitting_time(
    path: &LambdaPath,
    params: LambdaParams,
    rho: f64,
    bridge_correct: bool,
) -> Result<Hitting> {
    if !(rho > 0.0) || !rho.is_finite() {
        return argument(format!("hitting level must be positive, got {rho}"));
    }
    let scale = bridge_correct.then_some(params.lambda);
    let r = path.radius.r();
    let times = path.radius.grid.times();
    Ok(match first_crossing(times, &r, rho, scale) {
        Some(i) => Hitting::Hit(HittingSample {
            rho,
            tau: times[i],
            index: i,
            angle: path.angle.angle(i),
            lifted: path.angle.lifted(i),
        }),
        None => Hitting::NotHit,
    })
}

/// Log grid used for hitting-time experiments from the origin.
///
/// Times are `4^(lo + j/m)`; scaling time by 1/4 maps the grid onto itself,
/// so radius levels scaled by 1/2 see statistically identical
/// discretisations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingGrid {
    pub lo: i32,
    pub hi: i32,
    pub steps_per_quarter: usize,
}

impl Default for HittingGrid {
    fn default() -> Self {
        HittingGrid {
            lo: -8,
            hi: 4,
            steps_per_quarter: 64,
        }
    }
}

impl HittingGrid {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::quartic_log(self.lo, self.hi, self.steps_per_quarter)
    }
}

/// Lifted angles at the first grid crossings of each level in `radii`
/// (ascending), for a path from the origin; `None` if the top level is not
/// reached on the grid. Simulation stops at the top level.
pub fn hitting_angles(
    seed: Seed,
    params: LambdaParams,
    grid: &TimeGrid,
    radii: &[f64],
) -> Result<Option<Vec<f64>>> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return argument("hitting levels must be positive and strictly increasing");
    }
    let mut w = LambdaWalker::new(seed, params, grid, LambdaStart::Origin, None)?;
    let mut out = Vec::with_capacity(radii.len());
    loop {
        let r = w.r();
        while out.len() < radii.len() && r >= radii[out.len()] {
            out.push(w.theta);
        }
        if out.len() == radii.len() {
            return Ok(Some(out));
        }
        if !w.step() {
            return Ok(None);
        }
    }
}

/// Probability that the squared radius started at `r0²` reaches 0 before
/// `horizon`: for `δ < 2`, `τ_0 = r0² / (2 λ² G)` with `G ~ Gamma(1 - δ/2)`.
pub fn origin_hit_probability(params: LambdaParams, r0: f64, horizon: f64) -> f64 {
    if params.origin_is_polar() {
        return 0.0;
    }
    let a = 1.0 - 0.5 * params.delta;
    let x = r0 * r0 / (2.0 * params.lambda * params.lambda * horizon);
    statrs::function::gamma::gamma_ur(a, x)
}

/// Settings of the near-origin visit experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginReturnConfig {
    pub r0: f64,
    pub horizon: f64,
    /// Thresholds `ε` of the sweep; each reports `P(min R < ε before T)`.
    pub epsilons: Vec<f64>,
    pub n: usize,
    /// Step size `dt = min(kappa · Z, horizon / 100)`. Every step is an exact
    /// transition; `kappa` controls how finely near-origin excursions are
    /// monitored.
    pub kappa: f64,
}

impl OriginReturnConfig {
    pub fn new(horizon: f64, epsilons: Vec<f64>, n: usize) -> OriginReturnConfig {
        OriginReturnConfig {
            r0: 1.0,
            horizon,
            epsilons,
            n,
            kappa: 0.01,
        }
    }
}

/// Result of the near-origin visit experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginReturn {
    pub lambda: f64,
    pub r0: f64,
    pub horizon: f64,
    /// `(ε, estimate of P(min R < ε before T))`, in the order configured.
    pub rows: Vec<(f64, MeanEstimate)>,
    /// `P(τ_0 < T)` from the exact hitting law (0 when the origin is polar).
    pub exact_zero_hit: f64,
}

impl OriginReturn {
    pub fn estimate(&self, eps: f64) -> Option<MeanEstimate> {
        self.rows.iter().find(|(e, _)| *e == eps).map(|(_, m)| *m)
    }
}

fn min_radius_before(
    seed: Seed,
    params: LambdaParams,
    cfg: &OriginReturnConfig,
    stop_below: f64,
) -> f64 {
    let mut rng = seed.rng();
    let lam2 = params.lambda * params.lambda;
    let dt_max = cfg.horizon / 100.0;
    let mut z = cfg.r0 * cfg.r0;
    let mut t = 0.0;
    let mut min_r = cfg.r0;
    let stop_z = stop_below * stop_below;
    while cfg.horizon - t > 1e-12 * cfg.horizon {
        let dt = (cfg.kappa * z).min(dt_max).min(cfg.horizon - t);
        z = besq_sample(&mut rng, z, lam2 * dt, params.delta);
        t += dt;
        if z < min_r * min_r {
            min_r = z.sqrt();
        }
        if z < stop_z {
            break;
        }
    }
    min_r
}

/// Monte Carlo estimate of `P(min_{t <= T} R_t < ε)` from radius `r0`,
/// for each `ε` in the sweep.
pub fn return_to_origin_experiment(
    seed: Seed,
    params: LambdaParams,
    cfg: &OriginReturnConfig,
) -> Result<OriginReturn> {
    if cfg.epsilons.is_empty() || cfg.epsilons.iter().any(|&e| !(e > 0.0)) {
        return argument("epsilons must be a nonempty list of positive values");
    }
    if !(cfg.r0 > 0.0) {
        return argument(format!("r0 must be positive, got {}", cfg.r0));
    }
    if !(cfg.horizon > 0.0) || !cfg.horizon.is_finite() {
        return argument(format!(
            "horizon must be positive and finite, got {}",
            cfg.horizon
        ));
    }
    if cfg.n == 0 {
        return argument("n must be at least 1");
    }
    if !(cfg.kappa > 0.0 && cfg.kappa <= 1.0) {
        return argument(format!("kappa must lie in (0, 1], got {}", cfg.kappa));
    }
    let smallest = cfg.epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    let mins = replicate(seed, cfg.n, |s| min_radius_before(s, params, cfg, smallest));
    let rows = cfg
        .epsilons
        .iter()
        .map(|&eps| {
            let hits: Vec<f64> = mins
                .iter()
                .map(|&m| if m < eps { 1.0 } else { 0.0 })
                .collect();
            (eps, MeanEstimate::from_samples(&hits))
        })
        .collect();
    Ok(OriginReturn {
        lambda: params.lambda,
        r0: cfg.r0,
        horizon: cfg.horizon,
        rows,
        exact_zero_hit: origin_hit_probability(params, cfg.r0, cfg.horizon),
    })
}

/// Angle increments `θ_{τ_b} - θ_{τ_a}` over a radius shell for `n` paths
/// from the origin; paths that miss `b` on the grid are dropped.
pub fn shell_increments(
    seed: Seed,
    params: LambdaParams,
    grid: &TimeGrid,
    a: f64,
    b: f64,
    n: usize,
) -> Result<Vec<f64>> {
    if !(0.0 < a && a < b) {
        return argument(format!("shell needs 0 < a < b, got ({a}, {b})"));
    }
    let out = replicate(seed, n, |s| hitting_angles(s, params, grid, &[a, b]));
    let mut incs = Vec::with_capacity(n);
    for o in out {
        if let Some(th) = o? {
            incs.push(th[1] - th[0]);
        }
    }
    Ok(incs)
}

/// Two-sample comparison of angle increments over the shells `first` and
/// `second`, each sampled from its own replica set.
pub fn compare_shells(
    seed: Seed,
    params: LambdaParams,
    grid: &TimeGrid,
    first: (f64, f64),
    second: (f64, f64),
    n: usize,
) -> Result<TestReport> {
    let x = shell_increments(seed.derive(1), params, grid, first.0, first.1, n)?;
    let y = shell_increments(seed.derive(2), params, grid, second.0, second.1, n)?;
    if x.is_empty() || y.is_empty() {
        return argument("no path reached the outer shell radius; extend the grid");
    }
    Ok(ecf_two_sample(&x, &y, &[1, 2, 3])?
        .with_detail("missed_first", n - x.len())
        .with_detail("missed_second", n - y.len()))
}

/// Scale invariance: the angle increment over `(ρ0, ρ1)` has the same law
/// as over `(sqrt(α) ρ0, sqrt(α) ρ1)`.
pub fn scaling_check(
    seed: Seed,
    params: LambdaParams,
    rho0: f64,
    rho1: f64,
    alpha: f64,
    n: usize,
    grid: &HittingGrid,
) -> Result<TestReport> {
    if !(0.0 < rho0 && rho0 < rho1) {
        return argument(format!(
            "scaling check needs 0 < rho0 < rho1, got ({rho0}, {rho1})"
        ));
    }
    if !(alpha > 0.0) {
        return argument(format!("alpha must be positive, got {alpha}"));
    }
    let s = alpha.sqrt();
    Ok(compare_shells(
        seed,
        params,
        &grid.grid()?,
        (rho0, rho1),
        (s * rho0, s * rho1),
        n,
    )?
    .renamed("scaling_law")
    .with_detail("alpha", alpha))
}

/// Verdicts on the angle at radius hitting times.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTests {
    /// Kuiper uniformity of `θ_{τ_ρ}`.
    pub uniformity: TestReport,
    /// Factorisation between `θ_{τ_ρ}` and `θ_{τ_{2ρ}} - θ_{τ_ρ}`.
    pub independence: TestReport,
    /// `|E e_1(θ_{τ_ρ} - θ_{τ_{ρ/2}})| <= 1 - 5 stderr`.
    pub non_lattice: TestReport,
    /// Power-law decay of the increment ECF across the dyadic shells below ρ.
    pub decay: TestReport,
}

impl HittingTests {
    pub fn reports(&self) -> [&TestReport; 4] {
        [
            &self.uniformity,
            &self.independence,
            &self.non_lattice,
            &self.decay,
        ]
    }
}

/// Uniformity, independence and non-lattice checks for the angle at the
/// hitting times of `ρ 2^{-N}, ..., ρ/2, ρ, 2ρ`.
pub fn angle_at_hitting_tests(
    seed: Seed,
    params: LambdaParams,
    rho: f64,
    n: usize,
    levels: usize,
    grid: &HittingGrid,
) -> Result<HittingTests> {
    if !(params.lambda < CRITICAL_LAMBDA) {
        return argument(format!(
            "angle tests need lambda in (0, sqrt(2)/2), got {}",
            params.lambda
        ));
    }
    if !(rho > 0.0) {
        return argument(format!("rho must be positive, got {rho}"));
    }
    if levels < 2 {
        return argument(format!("need at least 2 dyadic levels, got {levels}"));
    }
    let radii: Vec<f64> = (0..=levels + 1)
        .map(|j| rho * 2f64.powi(j as i32 - levels as i32))
        .collect();
    let g = grid.grid()?;
    if g.start() > 0.0 {
        // the entrance draw must start well inside the innermost shell
        let typical = params.lambda * (params.delta * g.start()).sqrt();
        if typical > 0.25 * radii[0] {
            return domain(format!(
                "grid start 4^{} is too late for the innermost level {}",
                grid.lo, radii[0]
            ));
        }
    }
    let runs = replicate(seed, n, |s| hitting_angles(s, params, &g, &radii));
    let mut thetas = Vec::with_capacity(n);
    for r in runs {
        if let Some(th) = r? {
            thetas.push(th);
        }
    }
    let missed = n - thetas.len();
    if thetas.len() < 8 {
        return argument("too few paths reached 2ρ; extend the grid");
    }
    let top = levels; // index of ρ
    let at_rho: Vec<f64> = thetas.iter().map(|t| crate::torus::wrap(t[top])).collect();
    let outer: Vec<f64> = thetas.iter().map(|t| t[top + 1] - t[top]).collect();
    let shells: Vec<Vec<f64>> = thetas
        .iter()
        .map(|t| (0..levels).map(|j| t[top - j] - t[top - j - 1]).collect())
        .collect();

    let uniformity = kuiper_test(
        &TorusSample::new(at_rho.clone())?,
        crate::stats::DEFAULT_SIGNIFICANCE,
    )?
    .renamed("hitting_angle_uniformity")
    .with_detail("missed", missed);
    let independence = ecf_independence(&at_rho, &outer, 1, 1)?
        .renamed("hitting_angle_independence")
        .with_detail("missed", missed);
    let first: Vec<f64> = shells.iter().map(|s| s[0]).collect();
    let (mag, se) = ecf_magnitude(1, &first);
    let non_lattice = TestReport::upper("dyadic_non_lattice", first.len(), mag, 1.0 - 5.0 * se)
        .with_detail("stderr", se);
    let decay = dyadic_decay(&shells, 1)?.renamed("dyadic_power_decay");
    Ok(HittingTests {
        uniformity,
        independence,
        non_lattice,
        decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridKind};
    use crate::montecarlo::replicate;

    fn params(l: f64) -> LambdaParams {
        LambdaParams::new(l).unwrap()
    }

    #[test]
    fn params_validation() {
        assert_eq!(params(0.5).delta(), 4.0);
        assert!(params(0.5).origin_is_polar());
        assert!(params(CRITICAL_LAMBDA).origin_is_polar());
        assert!(!params(0.75).origin_is_polar());
        for bad in [0.0, 1.0, 1.5, -0.2, f64::NAN] {
            let e = LambdaParams::new(bad).unwrap_err();
            assert!(e.to_string().contains("lambda"));
        }
    }

    #[test]
    fn besq_errors() {
        assert!(besq_step(Seed::new(0, 0), -1.0, 1.0, 2.0).is_err());
        assert!(besq_step(Seed::new(0, 0), 1.0, 0.0, 2.0).is_err());
        assert!(besq_step(Seed::new(0, 0), 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn besq_entrance_mean() {
        let xs = replicate(Seed::new(1, 0), 100_000, |s| {
            besq_step(s, 0.0, 1.0, 4.0).unwrap()
        });
        let m = MeanEstimate::from_samples(&xs);
        assert!((m.mean - 4.0).abs() < 0.05, "{m:?}");
    }

    #[test]
    fn besq_mean_from_positive_start() {
        for (delta, dt) in [(1.2, 0.3), (2.0, 1.0), (4.0, 0.05), (100.0, 0.01)] {
            let xs = replicate(Seed::new(2, 0), 100_000, |s| {
                besq_step(s, 1.0, dt, delta).unwrap()
            });
            let m = MeanEstimate::from_samples(&xs);
            assert!(m.contains(1.0 + delta * dt, 3.0), "δ={delta}: {m:?}");
        }
    }

    #[test]
    fn besq_variance() {
        // Var = 4 z dt + 2 δ dt²
        let xs = replicate(Seed::new(3, 0), 100_000, |s| {
            besq_step(s, 2.0, 0.5, 3.0).unwrap()
        });
        let m = MeanEstimate::from_samples(&xs);
        let var = xs.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((var - 5.5).abs() < 0.15, "{var}");
    }

    #[test]
    fn squared_radius_has_mean_t() {
        let grid = make_grid(GridKind::Uniform, 0.0, 1.0, 3).unwrap();
        for l in [0.25, 0.5, 0.9] {
            let zs = replicate(Seed::new(4, 0), 100_000, |s| {
                simulate_lambda(s, params(l), &grid, LambdaStart::Origin, None)
                    .unwrap()
                    .radius
                    .z()
                    .to_vec()
            });
            for (i, t) in [(1, 0.5), (2, 1.0)] {
                let col: Vec<f64> = zs.iter().map(|z| z[i]).collect();
                let m = MeanEstimate::from_samples(&col);
                assert!(m.contains(t, 3.0), "λ={l} t={t}: {m:?}");
            }
        }
    }

    #[test]
    fn rescaled_clock_has_bessel_dimension() {
        // Z̃_t = Z_{t/λ²} is BESQ(δ) and has mean δ t
        let p = params(0.5);
        let t = 0.5;
        let grid = make_grid(GridKind::Uniform, 0.0, t / (p.lambda() * p.lambda()), 2).unwrap();
        let zs = replicate(Seed::new(5, 0), 100_000, |s| {
            simulate_lambda(s, p, &grid, LambdaStart::Origin, None)
                .unwrap()
                .radius
                .z()[1]
        });
        assert!(MeanEstimate::from_samples(&zs).contains(p.delta() * t, 3.0));
    }

    #[test]
    fn radius_concentrates_as_lambda_shrinks() {
        let grid = make_grid(GridKind::Uniform, 0.0, 1.0, 2).unwrap();
        let vars: Vec<f64> = [0.5, 0.25, 0.1]
            .iter()
            .map(|&l| {
                let rs = replicate(Seed::new(6, 0), 20_000, |s| {
                    simulate_lambda(s, params(l), &grid, LambdaStart::Origin, None)
                        .unwrap()
                        .radius
                        .z()[1]
                        .sqrt()
                });
                let m = MeanEstimate::from_samples(&rs);
                m.stderr * m.stderr * rs.len() as f64
            })
            .collect();
        assert!(vars[0] > vars[1] && vars[1] > vars[2], "{vars:?}");
    }

    #[test]
    fn same_seed_same_path() {
        let grid = make_grid(GridKind::Log, 0.01, 1.0, 50).unwrap();
        let a = simulate_lambda(
            Seed::new(7, 3),
            params(0.4),
            &grid,
            LambdaStart::Origin,
            Some(TorusAngle::wrap(1.0)),
        );
        let b = simulate_lambda(
            Seed::new(7, 3),
            params(0.4),
            &grid,
            LambdaStart::Origin,
            Some(TorusAngle::wrap(1.0)),
        );
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn origin_start_flags_first_step() {
        let grid = make_grid(GridKind::Uniform, 0.0, 1.0, 11).unwrap();
        let p = simulate_lambda(
            Seed::new(8, 0),
            params(0.5),
            &grid,
            LambdaStart::Origin,
            None,
        )
        .unwrap();
        assert!(p.radius.flagged_steps()[0]);
        assert_eq!(p.radius.flag_count(), 1);
        assert_eq!(p.angle.increment(0, 1), 0.0);
    }

    #[test]
    fn implied_driver_is_brownian() {
        let grid = make_grid(GridKind::Uniform, 1.0, 2.0, 201).unwrap();
        let ends = replicate(Seed::new(9, 0), 20_000, |s| {
            let p = simulate_lambda(s, params(0.3), &grid, LambdaStart::Radius(1.0), None).unwrap();
            *p.radius.implied_driver().last().unwrap()
        });
        let m = MeanEstimate::from_samples(&ends);
        let var = m.stderr * m.stderr * ends.len() as f64;
        assert!(m.mean.abs() < 3.0 * m.stderr);
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn hitting_time_synthetic() {
        let grid = TimeGrid::from_times(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = [0.5, 0.8, 1.2, 2.0];
        assert_eq!(first_crossing(grid.times(), &r, 1.0, None), Some(2));
        assert_eq!(first_crossing(grid.times(), &r, 0.1, None), Some(0));
        assert_eq!(first_crossing(grid.times(), &r, 3.0, None), None);
        // the shifted barrier can only move the crossing earlier
        assert_eq!(first_crossing(grid.times(), &r, 1.0, Some(1.0)), Some(1));
    }

    #[test]
    fn hitting_time_on_paths() {
        let grid = make_grid(GridKind::Log, 1e-3, 50.0, 400).unwrap();
        let p = simulate_lambda(
            Seed::new(10, 0),
            params(0.5),
            &grid,
            LambdaStart::Radius(0.5),
            None,
        )
        .unwrap();
        match hitting_time(&p, params(0.5), 0.4, false).unwrap() {
            Hitting::Hit(h) => {
                assert_eq!(h.index, 0);
                assert_eq!(h.tau, 1e-3);
            }
            Hitting::NotHit => panic!("starts above the level"),
        }
        assert_eq!(
            hitting_time(&p, params(0.5), 1e6, true).unwrap(),
            Hitting::NotHit
        );
        assert!(hitting_time(&p, params(0.5), 0.0, true).is_err());
        if let Hitting::Hit(h) = hitting_time(&p, params(0.5), 1.0, false).unwrap() {
            let r = p.radius.r();
            assert!(r[h.index - 1] < 1.0 && 1.0 <= r[h.index]);
        }
    }

    #[test]
    fn bridge_correction_removes_monitoring_bias() {
        // E τ_η = η² by optional stopping on Z_t - t
        let grid = TimeGrid::quartic_log(-8, 4, 256).unwrap();
        let p = params(0.5);
        let taus = replicate(Seed::new(11, 0), 20_000, |s| {
            let path = simulate_lambda(s, p, &grid, LambdaStart::Origin, None).unwrap();
            let raw = hitting_time(&path, p, 1.0, false)
                .unwrap()
                .sample()
                .unwrap()
                .tau;
            let corrected = hitting_time(&path, p, 1.0, true)
                .unwrap()
                .sample()
                .unwrap()
                .tau;
            (raw, corrected)
        });
        let raw = MeanEstimate::from_samples(&taus.iter().map(|t| t.0).collect::<Vec<_>>());
        let cor = MeanEstimate::from_samples(&taus.iter().map(|t| t.1).collect::<Vec<_>>());
        assert!(cor.contains(1.0, 3.0), "{cor:?}");
        assert!(raw.mean > cor.mean);
    }

    #[test]
    fn exact_origin_hitting_law() {
        assert_eq!(origin_hit_probability(params(0.5), 1.0, 10.0), 0.0);
        let p = origin_hit_probability(params(0.9), 1.0, 10.0);
        assert!((p - 0.619).abs() < 0.01, "{p}");
        assert!(origin_hit_probability(params(0.9), 1.0, 5000.0) > 0.95);
    }

    #[test]
    fn near_origin_visits_follow_the_dichotomy() {
        let cfg = OriginReturnConfig::new(10.0, vec![1e-2, 1e-3], 2000);
        let polar = return_to_origin_experiment(Seed::new(12, 0), params(0.5), &cfg).unwrap();
        assert!(polar.estimate(1e-3).unwrap().mean <= 0.05);
        let recurrent = return_to_origin_experiment(Seed::new(12, 0), params(0.9), &cfg).unwrap();
        let m = recurrent.estimate(1e-3).unwrap();
        // visiting ε before T is at least as likely as reaching 0 before T
        assert!(
            m.mean + 3.0 * m.stderr >= recurrent.exact_zero_hit,
            "{m:?} vs {}",
            recurrent.exact_zero_hit
        );
        assert!(m.mean - 3.0 * m.stderr <= recurrent.exact_zero_hit + 0.05);
        assert!(recurrent.estimate(1e-2).unwrap().mean >= m.mean);
    }

    #[test]
    fn origin_experiment_validates() {
        let mut cfg = OriginReturnConfig::new(10.0, vec![], 10);
        assert!(return_to_origin_experiment(Seed::new(0, 0), params(0.5), &cfg).is_err());
        cfg.epsilons = vec![1e-3];
        cfg.kappa = 0.0;
        assert!(return_to_origin_experiment(Seed::new(0, 0), params(0.5), &cfg).is_err());
    }

    #[test]
    fn scaling_identity_and_negative_control() {
        let grid = HittingGrid::default();
        let p = params(0.5);
        let same = scaling_check(Seed::new(13, 0), p, 0.5, 1.0, 1.0, 4000, &grid).unwrap();
        assert!(same.pass, "{same:?}");
        let quarter = scaling_check(Seed::new(14, 0), p, 0.5, 1.0, 0.25, 4000, &grid).unwrap();
        assert!(quarter.pass, "{quarter:?}");
        let g = grid.grid().unwrap();
        let neg = compare_shells(Seed::new(15, 0), p, &g, (0.5, 1.0), (0.5, 2.0), 4000).unwrap();
        assert!(!neg.pass, "{neg:?}");
    }

    #[test]
    fn hitting_tests_reject_recurrent_lambda() {
        let grid = HittingGrid::default();
        assert!(angle_at_hitting_tests(Seed::new(0, 0), params(0.75), 1.0, 100, 4, &grid).is_err());
        assert!(angle_at_hitting_tests(
            Seed::new(0, 0),
            params(CRITICAL_LAMBDA),
            1.0,
            100,
            4,
            &grid
        )
        .is_err());
    }

    #[test]
    fn hitting_angle_battery() {
        let t = angle_at_hitting_tests(
            Seed::new(16, 0),
            params(0.5),
            1.0,
            4000,
            4,
            &HittingGrid::default(),
        )
        .unwrap();
        for r in t.reports() {
            assert!(r.pass, "{r:?}");
        }
    }
}
