//! Running costs of planar unit-trace diffusions stopped at a radius.
//!
//! For a radial running cost `f(x) = f̃(|x|)` tangential motion from the
//! origin reaches radius `η` at the deterministic time `η²`, so its cost is
//! `∫_0^{η²} f̃(sqrt(t)) dt = 2 ∫_0^η ξ f̃(ξ) dξ`. This module evaluates that
//! closed form by quadrature and estimates the cost of tangential, radial,
//! λ-family and switching strategies by Monte Carlo.

use std::io::{self, Write};

use crate::brownian::normal;
use crate::error::{argument, domain, Result};
use crate::grid::{make_grid, GridKind, TimeGrid};
use crate::lambda::{LambdaParams, LambdaStart, LambdaWalker, BRIDGE_BETA};
use crate::montecarlo::{replicate, MeanEstimate};
use crate::path::fmt_f64;
use crate::rng::Seed;
use crate::stats::TestReport;
use crate::tangential::simulate_tangential;

use rand::Rng;

/// Shape of `f̃`.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFamily {
    /// `f̃ ≡ c`.
    Constant(f64),
    /// `f̃(r) = r^p`.
    Power(f64),
    /// Linear interpolation through `(r_i, f_i)`, flat outside the table.
    Tabulated(Vec<(f64, f64)>),
}

/// A radial running cost on the disc of radius `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCost {
    family: CostFamily,
    domain: f64,
}

impl RadialCost {
    pub fn constant(c: f64, domain: f64) -> Result<RadialCost> {
        if !c.is_finite() {
            return argument(format!("constant cost must be finite, got {c}"));
        }
        RadialCost::checked(CostFamily::Constant(c), domain)
    }

    pub fn power(p: f64, domain: f64) -> Result<RadialCost> {
        if !p.is_finite() {
            return argument(format!("power must be finite, got {p}"));
        }
        RadialCost::checked(CostFamily::Power(p), domain)
    }

    pub fn tabulated(points: Vec<(f64, f64)>, domain: f64) -> Result<RadialCost> {
        if points.len() < 2 {
            return argument("a tabulated cost needs at least two points");
        }
        if points
            .iter()
            .any(|(r, f)| !(r.is_finite() && f.is_finite()) || *r < 0.0)
        {
            return argument("tabulated radii must be finite and nonnegative, values finite");
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return argument("tabulated radii must be strictly increasing");
        }
        RadialCost::checked(CostFamily::Tabulated(points), domain)
    }

    fn checked(family: CostFamily, domain: f64) -> Result<RadialCost> {
        if !(domain > 0.0) || !domain.is_finite() {
            return argument(format!("domain radius must be positive, got {domain}"));
        }
        Ok(RadialCost { family, domain })
    }

    pub fn family(&self) -> &CostFamily {
        &self.family
    }

    pub fn domain(&self) -> f64 {
        self.domain
    }

    /// `f̃(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        match &self.family {
            CostFamily::Constant(c) => *c,
            CostFamily::Power(p) => r.powf(*p),
            CostFamily::Tabulated(pts) => {
                let last = pts.len() - 1;
                if r <= pts[0].0 {
                    return pts[0].1;
                }
                if r >= pts[last].0 {
                    return pts[last].1;
                }
                let j = pts.partition_point(|(x, _)| *x <= r);
                let (x0, y0) = pts[j - 1];
                let (x1, y1) = pts[j];
                y0 + (y1 - y0) * (r - x0) / (x1 - x0)
            }
        }
    }

    /// Whether `f̃` is unbounded at the origin.
    pub fn singular_at_origin(&self) -> bool {
        matches!(self.family, CostFamily::Power(p) if p < 0.0)
    }

    /// Whether `f̃` is nonincreasing on `(0, eta)`.
    pub fn nonincreasing_on(&self, eta: f64) -> bool {
        match &self.family {
            CostFamily::Constant(_) => true,
            CostFamily::Power(p) => *p <= 0.0,
            CostFamily::Tabulated(pts) => {
                let inside: Vec<f64> = pts
                    .iter()
                    .filter(|(r, _)| *r < eta)
                    .map(|(_, f)| *f)
                    .collect();
                let next = pts.iter().find(|(r, _)| *r >= eta).map(|_| self.eval(eta));
                inside
                    .iter()
                    .chain(next.iter())
                    .collect::<Vec<_>>()
                    .windows(2)
                    .all(|w| w[1] <= w[0])
            }
        }
    }

    /// Whether `f̃ > 0` on `(0, eta)`.
    pub fn positive_on(&self, eta: f64) -> bool {
        match &self.family {
            CostFamily::Constant(c) => *c > 0.0,
            CostFamily::Power(_) => true,
            CostFamily::Tabulated(pts) => {
                pts.iter().filter(|(r, _)| *r < eta).all(|(_, f)| *f > 0.0) && self.eval(eta) > 0.0
            }
        }
    }
}

// Gauss–Kronrod 15/7 nodes and weights on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` on `[a, b]` to
/// relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..5000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if !total.is_finite() {
            return domain("integrand is not integrable on the interval");
        }
        if err <= rel_tol * total.abs() || err < 1e-300 {
            return Ok(total);
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            return domain("quadrature cannot resolve the integrand");
        }
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    domain("quadrature did not converge")
}

/// `2 ∫_0^η ξ f̃(ξ) dξ` to relative tolerance `1e-8`.
pub fn tangential_cost_closed_form(f: &RadialCost, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= f.domain) {
        return argument(format!("eta must lie in (0, {}], got {eta}", f.domain));
    }
    if let CostFamily::Power(p) = f.family {
        if p <= -2.0 {
            return domain(format!("2∫ξ f̃(ξ)dξ diverges at 0 for power {p} <= -2"));
        }
    }
    segment_closed_form(f, 0.0, eta)
}

/// `2 ∫_a^b ξ f̃(ξ) dξ`, substituting `ξ = a + (b - a) u²` to soften a
/// power singularity at `a = 0`.
fn segment_closed_form(f: &RadialCost, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let span = b - a;
    let g = |u: f64| {
        let xi = a + span * u * u;
        if xi == 0.0 {
            return 0.0;
        }
        2.0 * xi * f.eval(xi) * 2.0 * span * u
    };
    if let CostFamily::Constant(c) = f.family {
        return Ok(c * (b * b - a * a));
    }
    integrate(g, 0.0, 1.0, 1e-10)
}

/// A control strategy. Every variant diffuses with unit total quadratic
/// variation rate.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// One-dimensional Brownian motion along the ray through the start (a
    /// fixed axis from the origin).
    Radial,
    /// Tangential motion.
    Tangential,
    /// The λ-family with the given `λ`.
    Lambda(f64),
    /// `inner` until radius `rho`, then `outer`.
    SwitchAtRadius {
        rho: f64,
        inner: Box<Strategy>,
        outer: Box<Strategy>,
    },
}

impl Strategy {
    fn validate(&self) -> Result<()> {
        match self {
            Strategy::Lambda(l) => LambdaParams::new(*l).map(|_| ()),
            Strategy::SwitchAtRadius { rho, inner, outer } => {
                if !(*rho > 0.0) {
                    return argument(format!("switch radius must be positive, got {rho}"));
                }
                inner.validate()?;
                outer.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Discretisation settings for [`cost_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CostSettings {
    /// Log-grid steps (even) for tangential paths.
    pub tangential_steps: usize,
    /// First simulated time of a tangential path from the origin, as a
    /// fraction of `η²`; `[0, t0]` is added in closed form.
    pub tangential_t0_fraction: f64,
    /// Radial step as a fraction of `η²`.
    pub radial_dt_fraction: f64,
    /// Radius below which a singular `f̃` is evaluated at the floor instead.
    pub radial_floor: f64,
    /// λ paths use the times `η² 4^(lo + j/m)`.
    pub lambda_lo: i32,
    pub lambda_hi: i32,
    pub lambda_steps_per_quarter: usize,
    /// Running integrals above this are treated as divergent.
    pub overflow: f64,
}

impl Default for CostSettings {
    fn default() -> Self {
        CostSettings {
            tangential_steps: 1000,
            tangential_t0_fraction: 1e-8,
            radial_dt_fraction: 1e-3,
            radial_floor: 1e-3,
            lambda_lo: -8,
            lambda_hi: 4,
            lambda_steps_per_quarter: 128,
            overflow: 1e12,
        }
    }
}

/// Monte Carlo estimate of an expected running cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    /// A singular cost was regularised near the origin (radial floor, or a
    /// non-exact entrance correction for λ-paths).
    pub truncated: bool,
    /// Replicas whose running integral crossed the overflow guard.
    pub blow_ups: usize,
    /// Replicas that did not reach the stop radius on the grid.
    pub unfinished: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct ReplicaCost {
    cost: f64,
    truncated: bool,
    blew_up: bool,
    unfinished: bool,
}

impl ReplicaCost {
    fn add(self, other: ReplicaCost) -> ReplicaCost {
        ReplicaCost {
            cost: self.cost + other.cost,
            truncated: self.truncated || other.truncated,
            blew_up: self.blew_up || other.blew_up,
            unfinished: self.unfinished || other.unfinished,
        }
    }
}

/// Composite Simpson in `u = ln t` on a log grid with an even step count.
fn simpson_log(times: &[f64], g: impl Fn(usize) -> f64) -> f64 {
    let n = times.len() - 1;
    let h = (times[n] / times[0]).ln() / n as f64;
    let mut s = g(0) * times[0] + g(n) * times[n];
    for (i, t) in times.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i) * t;
    }
    s * h / 3.0
}

fn tangential_replica(
    seed: Seed,
    f: &RadialCost,
    start: f64,
    stop: f64,
    st: &CostSettings,
) -> Result<ReplicaCost> {
    let t_end = stop * stop;
    if let CostFamily::Constant(c) = f.family {
        return Ok(ReplicaCost {
            cost: c * (t_end - start * start),
            ..Default::default()
        });
    }
    let (t_begin, head) = if start == 0.0 {
        let t0 = st.tangential_t0_fraction * t_end;
        (t0, tangential_cost_closed_form(f, t0.sqrt())?)
    } else {
        (start * start, 0.0)
    };
    let grid = make_grid(GridKind::Log, t_begin, t_end, st.tangential_steps + 1)?;
    let path = simulate_tangential(seed, &grid, None)?;
    let body = simpson_log(grid.times(), |i| {
        let x = path.planar(i);
        f.eval(x[0].hypot(x[1]))
    });
    Ok(ReplicaCost {
        cost: head + body,
        ..Default::default()
    })
}

fn radial_replica(
    seed: Seed,
    f: &RadialCost,
    start: f64,
    stop: f64,
    st: &CostSettings,
) -> ReplicaCost {
    let mut rng = seed.rng();
    let dt = st.radial_dt_fraction * stop * stop;
    let sd = dt.sqrt();
    let singular = f.singular_at_origin();
    let mut truncated = false;
    let mut eval = |x: f64| {
        let r = x.abs();
        if singular && r < st.radial_floor {
            truncated = true;
            f.eval(st.radial_floor)
        } else {
            f.eval(r.min(stop))
        }
    };
    let mut x = start;
    let mut fx = eval(x);
    let mut cost = 0.0;
    loop {
        let y = x + sd * normal(&mut rng);
        let fy = eval(y);
        cost += 0.5 * (fx + fy) * dt;
        if cost > st.overflow {
            return ReplicaCost {
                cost,
                truncated,
                blew_up: true,
                unfinished: false,
            };
        }
        if y.abs() >= stop {
            break;
        }
        // excursion beyond ±stop between the two grid points
        let p_up = (-2.0 * (stop - x) * (stop - y) / dt).exp();
        let p_down = (-2.0 * (stop + x) * (stop + y) / dt).exp();
        if rng.random::<f64>() < p_up + p_down {
            break;
        }
        x = y;
        fx = fy;
    }
    ReplicaCost {
        cost,
        truncated,
        blew_up: false,
        unfinished: false,
    }
}

/// `E ∫_0^{t0} f̃(R_t) dt` for a λ-path from the origin: exact for the
/// constant and power families, the tangential value otherwise.
fn lambda_entrance(f: &RadialCost, params: LambdaParams, t0: f64) -> Result<(f64, bool)> {
    use statrs::function::gamma::ln_gamma;
    match f.family {
        CostFamily::Constant(c) => Ok((c * t0, false)),
        CostFamily::Power(p) => {
            let delta = params.delta();
            if delta + p <= 0.0 || p <= -2.0 {
                return Ok((f64::INFINITY, false));
            }
            let moment = params.lambda().powf(p)
                * 2f64.powf(0.5 * p)
                * (ln_gamma(0.5 * (delta + p)) - ln_gamma(0.5 * delta)).exp();
            let q = 0.5 * p + 1.0;
            Ok((moment * t0.powf(q) / q, false))
        }
        CostFamily::Tabulated(_) => Ok((tangential_cost_closed_form(f, t0.sqrt())?, true)),
    }
}

fn lambda_replica(
    seed: Seed,
    lambda: f64,
    f: &RadialCost,
    start: f64,
    stop: f64,
    st: &CostSettings,
) -> Result<ReplicaCost> {
    let params = LambdaParams::new(lambda)?;
    let scale = if start == 0.0 {
        stop * stop
    } else {
        start * start / 16.0
    };
    let grid = TimeGrid::from_times(
        TimeGrid::quartic_log(st.lambda_lo, st.lambda_hi, st.lambda_steps_per_quarter)?
            .times()
            .iter()
            .map(|t| t * scale)
            .collect(),
    )?;
    let (begin, mut out) = if start == 0.0 {
        let (head, truncated) = lambda_entrance(f, params, grid.start())?;
        (
            LambdaStart::Origin,
            ReplicaCost {
                cost: head,
                truncated,
                ..Default::default()
            },
        )
    } else {
        (LambdaStart::Radius(start), ReplicaCost::default())
    };
    if !out.cost.is_finite() {
        out.blew_up = true;
        return Ok(out);
    }
    let times = grid.times();
    let mut w = LambdaWalker::new(seed, params, &grid, begin, None)?;
    let mut f_left = f.eval(w.r());
    loop {
        if !w.step() {
            out.unfinished = true;
            return Ok(out);
        }
        let i = w.i;
        let dt = times[i] - times[i - 1];
        let r = w.r();
        let f_right = f.eval(r);
        out.cost += 0.5 * (f_left + f_right) * dt;
        if out.cost > st.overflow {
            out.blew_up = true;
            return Ok(out);
        }
        if r >= stop - BRIDGE_BETA * lambda * dt.sqrt() {
            return Ok(out);
        }
        f_left = f_right;
    }
}

fn replica_cost(
    seed: Seed,
    strategy: &Strategy,
    f: &RadialCost,
    start: f64,
    stop: f64,
    st: &CostSettings,
) -> Result<ReplicaCost> {
    match strategy {
        Strategy::Tangential => tangential_replica(seed, f, start, stop, st),
        Strategy::Radial => Ok(radial_replica(seed, f, start, stop, st)),
        Strategy::Lambda(l) => lambda_replica(seed, *l, f, start, stop, st),
        Strategy::SwitchAtRadius { rho, inner, outer } => {
            if start >= *rho {
                return replica_cost(seed, outer, f, start, stop, st);
            }
            let mid = rho.min(stop);
            let a = replica_cost(seed.derive(1), inner, f, start, mid, st)?;
            if mid >= stop {
                return Ok(a);
            }
            let b = replica_cost(seed.derive(2), outer, f, mid, stop, st)?;
            Ok(a.add(b))
        }
    }
}

/// Monte Carlo estimate of `E ∫_0^τ f̃(|X_t|) dt` for `strategy` started at
/// radius `start` and stopped at radius `stop`.
pub fn cost_estimate(
    seed: Seed,
    strategy: &Strategy,
    f: &RadialCost,
    start: f64,
    stop: f64,
    n: usize,
    settings: &CostSettings,
) -> Result<CostEstimate> {
    strategy.validate()?;
    if !(0.0 <= start && start < stop && stop <= f.domain) {
        return argument(format!(
            "need 0 <= start < stop <= R = {}, got start = {start}, stop = {stop}",
            f.domain
        ));
    }
    if n == 0 {
        return argument("n must be at least 1");
    }
    if settings.tangential_steps == 0 || settings.tangential_steps % 2 == 1 {
        return argument("tangential_steps must be even and positive");
    }
    let runs = replicate(seed, n, |s| {
        replica_cost(s, strategy, f, start, stop, settings)
    });
    let mut costs = Vec::with_capacity(n);
    let (mut truncated, mut blow_ups, mut unfinished) = (false, 0, 0);
    for r in runs {
        let r = r?;
        truncated |= r.truncated;
        blow_ups += r.blew_up as usize;
        unfinished += r.unfinished as usize;
        costs.push(r.cost);
    }
    let m = MeanEstimate::from_samples(&costs);
    Ok(CostEstimate {
        mean: m.mean,
        stderr: m.stderr,
        n,
        truncated,
        blow_ups,
        unfinished,
    })
}

/// Relative floor on comparison tolerances, for estimates with zero
/// standard error.
pub const NUMERICAL_FLOOR: f64 = 1e-6;

/// Comparison band `max(k · combined stderr, NUMERICAL_FLOOR · |scale|)`.
pub fn tolerance(k: f64, stderrs: &[f64], scale: f64) -> f64 {
    let se = stderrs.iter().map(|s| s * s).sum::<f64>().sqrt();
    (k * se).max(NUMERICAL_FLOOR * scale.abs())
}

/// Additivity of tangential cost across radius `η`:
/// `cost(0 -> R) = 2 ∫_0^η ξ f̃ dξ + cost(η -> R)`.
pub fn dpp_origin_check(
    seed: Seed,
    f: &RadialCost,
    eta: f64,
    big_r: f64,
    n: usize,
    settings: &CostSettings,
) -> Result<TestReport> {
    if !(0.0 < eta && eta <= big_r && big_r <= f.domain) {
        return argument(format!(
            "need 0 < eta <= R <= domain, got eta = {eta}, R = {big_r}"
        ));
    }
    if !f.nonincreasing_on(eta) {
        return argument("the origin identity is checked for f̃ nonincreasing on (0, eta)");
    }
    let whole = cost_estimate(
        seed.derive(1),
        &Strategy::Tangential,
        f,
        0.0,
        big_r,
        n,
        settings,
    )?;
    let head = tangential_cost_closed_form(f, eta)?;
    let (tail_mean, tail_se) = if eta < big_r {
        let tail = cost_estimate(
            seed.derive(2),
            &Strategy::Tangential,
            f,
            eta,
            big_r,
            n,
            settings,
        )?;
        (tail.mean, tail.stderr)
    } else {
        (0.0, 0.0)
    };
    let stat = (whole.mean - head - tail_mean).abs();
    Ok(TestReport::upper(
        "dpp_origin",
        n,
        stat,
        tolerance(3.0, &[whole.stderr, tail_se], whole.mean),
    )
    .with_detail("cost_origin_to_R", whole.mean)
    .with_detail("closed_form_to_eta", head)
    .with_detail("cost_eta_to_R", tail_mean))
}

/// One row of the λ-limit table.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaLimitRow {
    pub lambda: f64,
    pub estimate: CostEstimate,
    pub limit: f64,
    /// `|mean - limit|`.
    pub gap: f64,
}

/// λ-family costs from the origin to `η` against the tangential closed form.
pub fn lambda_limit_experiment(
    seed: Seed,
    f: &RadialCost,
    eta: f64,
    lambdas: &[f64],
    n: usize,
    settings: &CostSettings,
) -> Result<Vec<LambdaLimitRow>> {
    if !f.nonincreasing_on(eta) || !f.positive_on(eta) {
        return argument("the λ limit is studied for f̃ positive and nonincreasing on (0, eta)");
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return argument("lambdas must be strictly decreasing");
    }
    let limit = tangential_cost_closed_form(f, eta)?;
    lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let estimate = cost_estimate(
                seed.derive(i as u64),
                &Strategy::Lambda(l),
                f,
                0.0,
                eta,
                n,
                settings,
            )?;
            let gap = (estimate.mean - limit).abs();
            Ok(LambdaLimitRow {
                lambda: l,
                estimate,
                limit,
                gap,
            })
        })
        .collect()
}

/// CSV with header `lambda,mean,stderr,n,limit,gap`.
pub fn write_lambda_limit_csv<W: Write>(rows: &[LambdaLimitRow], mut out: W) -> io::Result<()> {
    writeln!(out, "lambda,mean,stderr,n,limit,gap")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.lambda),
            fmt_f64(r.estimate.mean),
            fmt_f64(r.estimate.stderr),
            r.estimate.n,
            fmt_f64(r.limit),
            fmt_f64(r.gap)
        )?;
    }
    Ok(())
}

/// `σ(x) = |x|^{-1} (-x2, x1)ᵀ γᵀ`: a rank-one diffusion matrix whose
/// column space is the tangent direction at `x`.
pub fn sigma_factorization(x: [f64; 2], gamma: [f64; 2]) -> Result<[[f64; 2]; 2]> {
    if !(x[0].is_finite() && x[1].is_finite() && gamma[0].is_finite() && gamma[1].is_finite()) {
        return argument("inputs must be finite");
    }
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return domain("sigma is undefined at the origin");
    }
    let g = gamma[0].hypot(gamma[1]);
    if (g - 1.0).abs() > 1e-12 {
        return argument(format!("gamma must be a unit vector, |gamma| = {g}"));
    }
    let u = [-x[1] / r, x[0] / r];
    Ok([
        [u[0] * gamma[0], u[0] * gamma[1]],
        [u[1] * gamma[0], u[1] * gamma[1]],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assume, proptest};

    fn unit() -> RadialCost {
        RadialCost::constant(1.0, 1.0).unwrap()
    }

    fn pw(p: f64) -> RadialCost {
        RadialCost::power(p, 1.0).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert!((tangential_cost_closed_form(&unit(), 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((tangential_cost_closed_form(&pw(-1.0), 1.0).unwrap() - 2.0).abs() < 1e-8 * 2.0);
        assert!((tangential_cost_closed_form(&pw(1.0), 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-8);
        for p in [-1.9, -1.5, -0.3, 0.7, 2.5] {
            let got = tangential_cost_closed_form(&pw(p), 0.8).unwrap();
            let exact = 2.0 * 0.8f64.powf(p + 2.0) / (p + 2.0);
            assert!(
                (got - exact).abs() < 1e-8 * exact,
                "p={p}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn closed_form_errors() {
        assert!(matches!(
            tangential_cost_closed_form(&pw(-2.0), 0.5),
            Err(crate::Error::Domain(_))
        ));
        assert!(matches!(
            tangential_cost_closed_form(&pw(-3.0), 0.5),
            Err(crate::Error::Domain(_))
        ));
        assert!(tangential_cost_closed_form(&unit(), 0.0).is_err());
        assert!(tangential_cost_closed_form(&unit(), 1.5).is_err());
    }

    #[test]
    fn tabulated_interpolation() {
        let f = RadialCost::tabulated(vec![(0.0, 2.0), (1.0, 0.0)], 1.0).unwrap();
        assert_eq!(f.eval(0.25), 1.5);
        assert_eq!(f.eval(-1.0), 2.0);
        assert_eq!(f.eval(5.0), 0.0);
        assert!(f.nonincreasing_on(1.0));
        // 2∫ξ(2 - 2ξ) = 2(1 - 2/3)
        let got = tangential_cost_closed_form(&f, 1.0).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-8, "{got}");
        assert!(RadialCost::tabulated(vec![(0.0, 1.0)], 1.0).is_err());
        assert!(RadialCost::tabulated(vec![(0.5, 1.0), (0.2, 1.0)], 1.0).is_err());
    }

    #[test]
    fn quadrature_handles_endpoint_singularity() {
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn tangential_cost_constant_is_exact() {
        let est = cost_estimate(
            Seed::new(1, 0),
            &Strategy::Tangential,
            &unit(),
            0.0,
            0.5,
            10,
            &CostSettings::default(),
        )
        .unwrap();
        assert_eq!(est.mean, 0.25);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn tangential_cost_matches_closed_form() {
        for p in [-1.0, 0.0, 1.0] {
            let f = pw(p);
            let est = cost_estimate(
                Seed::new(2, 0),
                &Strategy::Tangential,
                &f,
                0.0,
                1.0,
                20,
                &CostSettings::default(),
            )
            .unwrap();
            let exact = tangential_cost_closed_form(&f, 1.0).unwrap();
            assert!(
                (est.mean - exact).abs() <= tolerance(3.0, &[est.stderr], exact),
                "p={p}: {est:?} vs {exact}"
            );
        }
    }

    #[test]
    fn radial_exit_time_from_origin() {
        let est = cost_estimate(
            Seed::new(3, 0),
            &Strategy::Radial,
            &unit(),
            0.0,
            1.0,
            10_000,
            &CostSettings::default(),
        )
        .unwrap();
        assert!((est.mean - 1.0).abs() <= 3.0 * est.stderr, "{est:?}");
        assert!(!est.truncated);
    }

    #[test]
    fn constant_cost_agrees_across_strategies() {
        let st = CostSettings::default();
        let f = RadialCost::constant(2.0, 1.0).unwrap();
        let strategies = [
            Strategy::Tangential,
            Strategy::Radial,
            Strategy::Lambda(0.5),
            Strategy::SwitchAtRadius {
                rho: 0.5,
                inner: Box::new(Strategy::Tangential),
                outer: Box::new(Strategy::Radial),
            },
        ];
        for s in &strategies {
            let est = cost_estimate(Seed::new(4, 0), s, &f, 0.0, 1.0, 10_000, &st).unwrap();
            assert!(
                (est.mean - 2.0).abs() <= tolerance(3.0, &[est.stderr], 2.0),
                "{s:?}: {est:?}"
            );
        }
    }

    #[test]
    fn switching_from_inside_uses_both_legs() {
        let st = CostSettings::default();
        let s = Strategy::SwitchAtRadius {
            rho: 0.5,
            inner: Box::new(Strategy::Tangential),
            outer: Box::new(Strategy::Tangential),
        };
        let est = cost_estimate(Seed::new(5, 0), &s, &pw(-1.0), 0.0, 1.0, 4, &st).unwrap();
        assert!((est.mean - 2.0).abs() < 1e-6, "{est:?}");
    }

    #[test]
    fn lambda_cost_is_finite_for_singular_cost() {
        let est = cost_estimate(
            Seed::new(6, 0),
            &Strategy::Lambda(0.5),
            &pw(-1.0),
            0.0,
            1.0,
            2000,
            &CostSettings::default(),
        )
        .unwrap();
        assert!(est.mean.is_finite() && est.stderr > 0.0);
        assert_eq!(est.blow_ups, 0);
        assert_eq!(est.unfinished, 0);
    }

    #[test]
    fn radial_costs_more_than_tangential_for_decreasing_cost() {
        let st = CostSettings::default();
        let f = pw(-1.0);
        let radial =
            cost_estimate(Seed::new(7, 0), &Strategy::Radial, &f, 0.0, 1.0, 2000, &st).unwrap();
        let tangential = cost_estimate(
            Seed::new(7, 0),
            &Strategy::Tangential,
            &f,
            0.0,
            1.0,
            10,
            &st,
        )
        .unwrap();
        assert!(radial.truncated);
        assert!(
            radial.mean - tangential.mean
                >= 3.0 * (radial.stderr.powi(2) + tangential.stderr.powi(2)).sqrt()
        );
    }

    #[test]
    fn cost_estimate_validation() {
        let st = CostSettings::default();
        assert!(cost_estimate(
            Seed::new(0, 0),
            &Strategy::Tangential,
            &unit(),
            0.5,
            0.5,
            1,
            &st
        )
        .is_err());
        assert!(cost_estimate(
            Seed::new(0, 0),
            &Strategy::Tangential,
            &unit(),
            0.0,
            2.0,
            1,
            &st
        )
        .is_err());
        assert!(cost_estimate(
            Seed::new(0, 0),
            &Strategy::Lambda(1.5),
            &unit(),
            0.0,
            1.0,
            1,
            &st
        )
        .is_err());
    }

    #[test]
    fn dpp_examples() {
        let st = CostSettings::default();
        let r = dpp_origin_check(Seed::new(8, 0), &unit(), 0.5, 1.0, 10, &st).unwrap();
        assert_eq!(r.statistic, 0.0);
        let r = dpp_origin_check(Seed::new(8, 0), &pw(-1.0), 0.5, 1.0, 100, &st).unwrap();
        assert!(r.pass, "{r:?}");
        let r = dpp_origin_check(Seed::new(8, 0), &pw(-1.0), 1.0, 1.0, 10, &st).unwrap();
        assert!(r.pass && r.detail("cost_eta_to_R") == Some("0"));
        assert!(dpp_origin_check(Seed::new(8, 0), &pw(1.0), 0.5, 1.0, 10, &st).is_err());
    }

    #[test]
    fn lambda_limit_examples() {
        let st = CostSettings::default();
        assert!(
            lambda_limit_experiment(Seed::new(9, 0), &pw(-1.0), 1.0, &[], 10, &st)
                .unwrap()
                .is_empty()
        );
        assert!(
            lambda_limit_experiment(Seed::new(9, 0), &pw(-1.0), 1.0, &[0.1, 0.5], 10, &st).is_err()
        );
        let rows =
            lambda_limit_experiment(Seed::new(9, 0), &unit(), 1.0, &[0.5, 0.25], 10_000, &st)
                .unwrap();
        for r in &rows {
            assert!(
                r.estimate.mean - 1.0 <= 3.0 * r.estimate.stderr + 1e-3,
                "{r:?}"
            );
            assert!(
                1.0 - r.estimate.mean <= 3.0 * r.estimate.stderr + 1e-3,
                "{r:?}"
            );
        }
        let mut buf = Vec::new();
        write_lambda_limit_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("lambda,mean,stderr,n,limit,gap\n"));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(
            sigma_factorization([1.0, 0.0], [1.0, 0.0]).unwrap(),
            [[0.0, 0.0], [1.0, 0.0]]
        );
        assert_eq!(
            sigma_factorization([0.0, 1.0], [0.0, 1.0]).unwrap(),
            [[0.0, -1.0], [0.0, 0.0]]
        );
        assert!(matches!(
            sigma_factorization([0.0, 0.0], [1.0, 0.0]),
            Err(crate::Error::Domain(_))
        ));
        assert!(matches!(
            sigma_factorization([1.0, 0.0], [1.0, 1.0]),
            Err(crate::Error::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn sigma_has_unit_trace_and_tangent_range(
            x0 in -10.0f64..10.0, x1 in -10.0f64..10.0, angle in 0.0f64..std::f64::consts::TAU,
        ) {
            prop_assume!(x0.hypot(x1) > 1e-6);
            let g = [angle.cos(), angle.sin()];
            prop_assume!((g[0].hypot(g[1]) - 1.0).abs() <= 1e-12);
            let s = sigma_factorization([x0, x1], g).unwrap();
            let trace = s[0][0].powi(2) + s[0][1].powi(2) + s[1][0].powi(2) + s[1][1].powi(2);
            prop_assert!((trace - 1.0).abs() <= 4.0 * f64::EPSILON);
            // every column is parallel to (-x1, x0)
            for (a, b) in s[0].iter().zip(&s[1]) {
                prop_assert!((a * x0 + b * x1).abs() <= 1e-12 * x0.hypot(x1));
            }
        }
    }
}
