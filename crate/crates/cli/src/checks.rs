//! The acceptance battery, one function per group of checks.
//!
//! Each function is a pure function of its seed and parameter block and
//! returns its verdicts together with the data tables it produced.

use std::f64::consts::TAU;

use tanlab_core::classics::{
    reconstruct_tsirelson, simulate_tanaka, simulate_tsirelson, tanaka_driver, TsirelsonConfig,
    ZeroSign,
};
use tanlab_core::control::{
    cost_estimate, dpp_origin_check, lambda_limit_experiment, tangential_cost_closed_form,
    tolerance, write_lambda_limit_csv, CostSettings, RadialCost, Strategy,
};
use tanlab_core::lambda::{
    angle_at_hitting_tests, compare_shells, return_to_origin_experiment, scaling_check,
    simulate_lambda, HittingGrid, LambdaParams, LambdaStart, OriginReturnConfig,
};
use tanlab_core::montecarlo::{correlation, replicate, MeanEstimate};
use tanlab_core::path::fmt_f64;
use tanlab_core::stats::{ecf_independence, kuiper_test};
use tanlab_core::tangential::{
    angle_marginal_sample, default_windows, reconstruct_lifted, shared_noise_pair,
    simulate_tangential,
};
use tanlab_core::torus::centered;
use tanlab_core::{
    make_grid, GridKind, Path, Result, Seed, TestReport, TimeGrid, TorusAngle, TorusSample,
};

use crate::config::{
    AngleBlock, BesselBlock, ControlBlock, FigureBlock, HittingBlock, OriginReturnBlock,
    RadiusBlock, ReconstructionBlock, ScalingBlock, SharedNoiseBlock, TanakaBlock, TsirelsonBlock,
};

/// Verdicts of one group plus named data files (relative paths).
#[derive(Debug, Clone, Default)]
pub struct Section {
    pub reports: Vec<TestReport>,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Section {
    fn report(mut self, r: TestReport) -> Self {
        self.reports.push(r);
        self
    }

    fn file(mut self, name: &str, bytes: Vec<u8>) -> Self {
        self.files.push((name.to_string(), bytes));
        self
    }
}

/// A report that passes when the statistic reaches the threshold from below.
fn lower(name: impl Into<String>, n: usize, statistic: f64, threshold: f64) -> TestReport {
    let mut r = TestReport::upper(name, n, statistic, threshold).with_detail("direction", "lower");
    r.pass = statistic >= threshold;
    r
}

fn fmt_key(x: f64) -> String {
    format!("{x}")
}

/// `||X_t| - sqrt(t)|` in units of `sqrt(t) · ε` over many tangential paths.
pub fn exact_radius(seed: Seed, b: &RadiusBlock) -> Result<Section> {
    let grid = make_grid(GridKind::Log, b.t0, b.t1, b.steps + 1)?;
    let worst = replicate(seed, b.paths, |s| -> Result<f64> {
        let p = simulate_tangential(s, &grid, None)?;
        let mut w = 0.0f64;
        for (i, t) in grid.times().iter().enumerate() {
            let x = p.planar(i);
            let root = t.sqrt();
            w = w.max((x[0].hypot(x[1]) - root).abs() / (root * f64::EPSILON));
        }
        Ok(w)
    });
    let mut stat = 0.0f64;
    for w in worst {
        stat = stat.max(w?);
    }
    let mut csv = Vec::new();
    simulate_tangential(seed.with_stream(0), &grid, None)?
        .write_csv(&mut csv)
        .expect("write to memory");
    Ok(Section::default()
        .report(TestReport::upper(
            "exact_radius_ulps",
            b.paths,
            stat,
            b.max_ulps,
        ))
        .file("tangential_path.csv", csv))
}

/// Kuiper uniformity of `θ_{e^s}` and ECF independence from later
/// increments of the circular clock.
pub fn angle_marginal(seed: Seed, b: &AngleBlock) -> Result<Section> {
    let mut out = Section::default();
    let mut rows = String::from("s,n,kuiper,critical,p_value\n");
    for (i, &s) in b.s_values.iter().enumerate() {
        // a fixed start long before e^s: uniformity must come from the dynamics
        let grid = TimeGrid::from_times(vec![(s - b.burn_in).exp(), s.exp()])?;
        let angles = replicate(seed.derive(i as u64), b.n, |sd| {
            simulate_tangential(sd, &grid, Some(TorusAngle::wrap(0.0))).map(|p| p.angle(1).value())
        });
        let angles: Vec<f64> = angles.into_iter().collect::<Result<_>>()?;
        let r = kuiper_test(&TorusSample::new(angles)?, b.significance)?
            .renamed(format!("angle_uniformity_s{}", fmt_key(s)))
            .with_detail("start", format!("0 at e^{}", s - b.burn_in));
        rows.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(s),
            r.n,
            fmt_f64(r.statistic),
            fmt_f64(r.threshold),
            r.detail("p_value").unwrap_or("")
        ));
        out = out.report(r);
    }
    let s = b.independence_s;
    let sample = angle_marginal_sample(seed.derive(1000), s, b.n, &default_windows(s))?;
    for (w, inc) in sample.increments.iter().enumerate() {
        let (lo, hi) = sample.windows[w];
        let r = ecf_independence(&sample.angles, inc, 1, 1)?
            .renamed(format!("angle_independence_w{}", w + 1))
            .with_detail("window", format!("({lo} {hi})"));
        out = out.report(r);
    }
    Ok(out.file("angle_uniformity.csv", rows.into_bytes()))
}

/// Two solutions on the same noise keep their initial offset exactly.
pub fn shared_noise(seed: Seed, b: &SharedNoiseBlock) -> Result<Section> {
    let grid = make_grid(GridKind::Log, b.t0, b.t1, b.steps + 1)?;
    let mut out = Section::default();
    for (i, &offset) in b.offsets.iter().enumerate() {
        let (p, q) =
            shared_noise_pair(seed.with_stream(i as u64), &grid, TorusAngle::wrap(offset))?;
        let target = TorusAngle::wrap(offset).value();
        let mut dev = if p.driver() == q.driver() {
            0.0f64
        } else {
            f64::INFINITY
        };
        let mut scale = 1.0f64;
        for j in 0..p.len() {
            dev = dev.max(centered(q.lifted(j) - p.lifted(j) - target).abs());
            scale = scale.max(p.lifted(j).abs()).max(q.lifted(j).abs());
        }
        out = out.report(
            TestReport::upper(
                format!("shared_noise_offset_{:.4}", offset),
                p.len(),
                dev,
                16.0 * f64::EPSILON * scale,
            )
            .with_detail("steps", b.steps),
        );
    }
    Ok(out)
}

/// RMS error of the left-point reconstruction of `θ_t` from `θ_s` and the
/// driver, on a grid and on its 4x refinement.
pub fn reconstruction(seed: Seed, b: &ReconstructionBlock) -> Result<Section> {
    let fine = make_grid(GridKind::Log, b.s, b.t, b.fine_steps + 1)?;
    let coarse = fine.coarsen(4)?;
    let errs = replicate(seed, b.replicas, |sd| -> Result<(f64, f64)> {
        let p = simulate_tangential(sd, &fine, None)?;
        let truth = p.lifted(fine.len() - 1);
        let coarse_driver: Vec<f64> = p.driver().iter().copied().step_by(4).collect();
        let f = reconstruct_lifted(p.lifted(0), &fine, p.driver(), b.s, b.t)?;
        let c = reconstruct_lifted(p.lifted(0), &coarse, &coarse_driver, b.s, b.t)?;
        Ok(((f - truth).powi(2), (c - truth).powi(2)))
    });
    let (mut fine_sq, mut coarse_sq) = (0.0, 0.0);
    for e in errs {
        let (f, c) = e?;
        fine_sq += f;
        coarse_sq += c;
    }
    let n = b.replicas as f64;
    let (rf, rc) = ((fine_sq / n).sqrt(), (coarse_sq / n).sqrt());
    let csv = format!(
        "steps,rms_error\n{},{}\n{},{}\n",
        b.fine_steps / 4,
        fmt_f64(rc),
        b.fine_steps,
        fmt_f64(rf)
    );
    Ok(Section::default()
        .report(
            TestReport::upper(
                "reconstruction_refinement",
                b.replicas,
                rf / rc,
                b.max_ratio,
            )
            .with_detail("rms_fine", rf)
            .with_detail("rms_coarse", rc),
        )
        .file("reconstruction.csv", csv.into_bytes()))
}

/// `E[Z_t] = t` for the squared radius of λ-paths from the origin.
pub fn bessel_means(seed: Seed, b: &BesselBlock) -> Result<Section> {
    let mut times = b.times.clone();
    times.sort_by(|x, y| x.total_cmp(y));
    times.dedup();
    // each requested time is reached through 8 exact transitions
    let mut knots = vec![0.0];
    let mut prev = 0.0;
    for &t in &times {
        for j in 1..=8 {
            knots.push(prev + (t - prev) * j as f64 / 8.0);
        }
        *knots.last_mut().expect("nonempty") = t;
        prev = t;
    }
    let grid = TimeGrid::from_times(knots)?;
    let idx: Vec<usize> = times
        .iter()
        .map(|&t| grid.index_of(t).expect("knot"))
        .collect();
    let mut out = Section::default();
    let mut csv = String::from("lambda,t,mean,stderr,n\n");
    for (li, &l) in b.lambdas.iter().enumerate() {
        let params = LambdaParams::new(l)?;
        let zs = replicate(seed.derive(li as u64), b.n, |s| -> Result<Vec<f64>> {
            let p = simulate_lambda(s, params, &grid, LambdaStart::Origin, None)?;
            Ok(idx.iter().map(|&i| p.radius.z()[i]).collect())
        });
        let zs: Vec<Vec<f64>> = zs.into_iter().collect::<Result<_>>()?;
        for (k, &t) in times.iter().enumerate() {
            let col: Vec<f64> = zs.iter().map(|z| z[k]).collect();
            let m = MeanEstimate::from_samples(&col);
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(l),
                fmt_f64(t),
                fmt_f64(m.mean),
                fmt_f64(m.stderr),
                m.n
            ));
            out = out.report(
                TestReport::upper(
                    format!("bessel_mean_lambda{}_t{}", fmt_key(l), fmt_key(t)),
                    m.n,
                    (m.mean - t).abs() / m.stderr,
                    3.0,
                )
                .with_detail("mean", m.mean)
                .with_detail("stderr", m.stderr),
            );
        }
    }
    Ok(out.file("bessel_means.csv", csv.into_bytes()))
}

fn origin_config(
    b: &OriginReturnBlock,
    horizon: f64,
    eps: Vec<f64>,
    n: usize,
) -> OriginReturnConfig {
    OriginReturnConfig {
        r0: b.r0,
        horizon,
        epsilons: eps,
        n,
        kappa: b.kappa,
    }
}

/// Near-origin visit frequency below and above the critical λ, plus a
/// sweep table across λ.
pub fn origin_return(seed: Seed, b: &OriginReturnBlock) -> Result<Section> {
    let polar = return_to_origin_experiment(
        seed.derive(1),
        LambdaParams::new(b.polar_lambda)?,
        &origin_config(b, b.polar_horizon, vec![b.eps], b.n),
    )?;
    let recurrent = return_to_origin_experiment(
        seed.derive(2),
        LambdaParams::new(b.recurrent_lambda)?,
        &origin_config(b, b.recurrent_horizon, vec![b.eps], b.n),
    )?;
    let p = polar.rows[0].1;
    let q = recurrent.rows[0].1;
    let mut out = Section::default()
        .report(
            TestReport::upper("origin_return_polar", b.n, p.mean, b.polar_max)
                .with_detail("lambda", b.polar_lambda)
                .with_detail("horizon", b.polar_horizon)
                .with_detail("stderr", p.stderr),
        )
        .report(
            lower("origin_return_recurrent", b.n, q.mean, b.recurrent_min)
                .with_detail("lambda", b.recurrent_lambda)
                .with_detail("horizon", b.recurrent_horizon)
                .with_detail("stderr", q.stderr)
                .with_detail("exact_zero_hit", recurrent.exact_zero_hit),
        );
    let mut csv = String::from("lambda,eps,horizon,estimate,stderr,n,exact_zero_hit\n");
    for (i, &l) in b.sweep_lambdas.iter().enumerate() {
        let res = return_to_origin_experiment(
            seed.derive(100 + i as u64),
            LambdaParams::new(l)?,
            &origin_config(b, b.sweep_horizon, b.sweep_eps.clone(), b.sweep_n),
        )?;
        for (eps, m) in &res.rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_f64(l),
                fmt_f64(*eps),
                fmt_f64(res.horizon),
                fmt_f64(m.mean),
                fmt_f64(m.stderr),
                m.n,
                fmt_f64(res.exact_zero_hit)
            ));
        }
    }
    out = out.file("origin_return_sweep.csv", csv.into_bytes());
    Ok(out)
}

/// Angle at radius hitting times: uniformity, independence, non-lattice and
/// dyadic decay.
pub fn hitting(seed: Seed, b: &HittingBlock) -> Result<Section> {
    let grid = HittingGrid {
        lo: b.grid_lo,
        hi: b.grid_hi,
        steps_per_quarter: b.steps_per_quarter,
    };
    let t = angle_at_hitting_tests(
        seed,
        LambdaParams::new(b.lambda)?,
        b.rho,
        b.n,
        b.levels,
        &grid,
    )?;
    let mut out = Section::default();
    for r in t.reports() {
        out = out.report(r.clone());
    }
    Ok(out)
}

/// Scale invariance of angle increments over ratio-preserving shells, with a
/// negative control on shells of a different ratio.
pub fn scaling(seed: Seed, b: &ScalingBlock) -> Result<Section> {
    let params = LambdaParams::new(b.lambda)?;
    let grid = HittingGrid::default();
    let same = scaling_check(seed.derive(1), params, b.rho0, b.rho1, b.alpha, b.n, &grid)?;
    let ctl = compare_shells(
        seed.derive(2),
        params,
        &grid.grid()?,
        (b.rho0, b.rho1),
        (b.rho0, b.control_rho1),
        b.n,
    )?;
    let negative = lower(
        "scaling_negative_control",
        ctl.n,
        ctl.statistic,
        ctl.threshold,
    )
    .with_detail("second_shell", format!("({} {})", b.rho0, b.control_rho1));
    Ok(Section::default().report(same).report(negative))
}

/// Tsirelson levels: uniform, independent of the driving increments, and
/// recovered exactly by forward reconstruction.
pub fn tsirelson(seed: Seed, b: &TsirelsonBlock) -> Result<Section> {
    let cfg = TsirelsonConfig::dyadic(b.depth, b.substeps)?;
    let paths = replicate(seed, b.n, |s| simulate_tsirelson(s, &cfg));
    let paths: Vec<_> = paths.into_iter().collect::<Result<_>>()?;
    let b0: Vec<f64> = paths
        .iter()
        .map(|p| TAU * p.b_at(0).expect("level 0"))
        .collect();
    let dw_last: Vec<f64> = paths
        .iter()
        .map(|p| {
            let w = p.w.scalar_values().expect("scalar");
            w[w.len() - 1] - w[w.len() - 1 - b.substeps]
        })
        .collect();
    let uniform =
        kuiper_test(&TorusSample::new(b0.clone())?, 0.01)?.renamed("tsirelson_level_uniformity");
    let indep = ecf_independence(&b0, &dw_last, 1, 1)?.renamed("tsirelson_level_independence");

    let depth = b.depth as i32;
    let mut bad = 0usize;
    for p in &paths {
        let x = p.x.scalar_values()?;
        for k in (1 - depth)..=0 {
            let start = (k + depth - 1) as usize * b.substeps;
            let rebuilt = reconstruct_tsirelson(
                &cfg,
                k,
                x[start],
                p.b_at(k).expect("level"),
                &p.dw[start..],
            )?;
            bad += usize::from(rebuilt.as_slice() != &x[start..]);
        }
    }
    let mut csv = Vec::new();
    paths[0]
        .write_levels_csv(&mut csv)
        .expect("write to memory");
    Ok(Section::default()
        .report(uniform)
        .report(indep)
        .report(
            TestReport::upper("tsirelson_reconstruction_mismatches", b.n, bad as f64, 0.0)
                .with_detail("levels_per_path", b.depth),
        )
        .file("tsirelson_levels.csv", csv))
}

/// Tanaka: the sign of `X_T` is uncorrelated with `W_T`, and `W` does not
/// change when `X` is negated.
pub fn tanaka(seed: Seed, b: &TanakaBlock) -> Result<Section> {
    let grid = make_grid(GridKind::Uniform, 0.0, b.t1, b.steps + 1)?;
    let runs = replicate(seed, b.n, |s| -> Result<(f64, f64, f64)> {
        let p = simulate_tanaka(s, &grid, ZeroSign::default())?;
        let x = p.x.scalar_values()?;
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let flipped = tanaka_driver(&Path::scalar(grid.clone(), neg)?, ZeroSign::default())?;
        let w = p.w.scalar_values()?;
        let dev = w
            .iter()
            .zip(flipped.scalar_values()?)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((x[x.len() - 1].signum(), w[w.len() - 1], dev))
    });
    let (mut signs, mut ws, mut dev) = (Vec::with_capacity(b.n), Vec::with_capacity(b.n), 0.0f64);
    for r in runs {
        let (s, w, d) = r?;
        signs.push(s);
        ws.push(w);
        dev = dev.max(d);
    }
    let rho = correlation(&signs, &ws);
    let n = b.n as f64;
    let mut csv = Vec::new();
    simulate_tanaka(seed.with_stream(0), &grid, ZeroSign::default())?
        .write_csv(&mut csv)
        .expect("write to memory");
    Ok(Section::default()
        .report(TestReport::upper(
            "tanaka_sign_correlation",
            b.n,
            rho.abs(),
            3.0 / n.sqrt(),
        ))
        .report(TestReport::upper("tanaka_flip_invariance", b.n, dev, 0.0))
        .file("tanaka_path.csv", csv))
}

/// Closed-form tangential costs, exact constant cost, origin additivity,
/// radial dominance and the λ → 0 limit.
pub fn control(seed: Seed, b: &ControlBlock) -> Result<Section> {
    let settings = CostSettings::default();
    let eta = b.eta;
    let mut out = Section::default();
    for (i, p) in [0.0, 1.0, -1.0].into_iter().enumerate() {
        let f = RadialCost::power(p, eta)?;
        let cf = tangential_cost_closed_form(&f, eta)?;
        let est = cost_estimate(
            seed.derive(i as u64),
            &Strategy::Tangential,
            &f,
            0.0,
            eta,
            b.tangential_n,
            &settings,
        )?;
        out = out.report(
            TestReport::upper(
                format!("control_closed_form_p{}", fmt_key(p)),
                est.n,
                (est.mean - cf).abs(),
                tolerance(3.0, &[est.stderr], cf),
            )
            .with_detail("mean", est.mean)
            .with_detail("closed_form", cf),
        );
    }

    let one = RadialCost::constant(1.0, eta)?;
    let est = cost_estimate(
        seed.derive(10),
        &Strategy::Tangential,
        &one,
        0.0,
        eta,
        b.tangential_n,
        &settings,
    )?;
    out = out.report(
        TestReport::upper(
            "control_constant_exact",
            est.n,
            (est.mean - eta * eta).abs() + est.stderr,
            4.0 * f64::EPSILON * eta * eta,
        )
        .with_detail("mean", est.mean),
    );

    let inv = RadialCost::power(-1.0, b.dpp_r)?;
    out = out.report(dpp_origin_check(
        seed.derive(11),
        &inv,
        b.dpp_eta,
        b.dpp_r,
        b.dpp_n,
        &settings,
    )?);

    let inv_eta = RadialCost::power(-1.0, eta)?;
    let tan = cost_estimate(
        seed.derive(12),
        &Strategy::Tangential,
        &inv_eta,
        0.0,
        eta,
        b.tangential_n,
        &settings,
    )?;
    let rad = cost_estimate(
        seed.derive(13),
        &Strategy::Radial,
        &inv_eta,
        0.0,
        eta,
        b.radial_n,
        &settings,
    )?;
    out = out.report(
        TestReport::upper(
            "control_radial_dominates",
            rad.n,
            tan.mean - rad.mean,
            -3.0 * (tan.stderr.powi(2) + rad.stderr.powi(2)).sqrt(),
        )
        .with_detail("tangential", tan.mean)
        .with_detail("radial", rad.mean)
        .with_detail("radial_truncated", rad.truncated),
    );

    let rows = lambda_limit_experiment(
        seed.derive(14),
        &inv_eta,
        eta,
        &b.lambdas,
        b.lambda_n,
        &settings,
    )?;
    let mut worst = f64::NEG_INFINITY;
    for w in rows.windows(2) {
        let se = (w[0].estimate.stderr.powi(2) + w[1].estimate.stderr.powi(2)).sqrt();
        worst = worst.max(w[1].gap - w[0].gap - 3.0 * se);
    }
    if rows.len() < 2 {
        worst = 0.0;
    }
    let mut r = TestReport::upper("control_lambda_limit_monotone", b.lambda_n, worst, 0.0);
    if let Some(last) = rows.last() {
        r = r
            .with_detail("terminal_gap", last.gap)
            .with_detail("limit", last.limit);
    }
    let mut csv = Vec::new();
    write_lambda_limit_csv(&rows, &mut csv).expect("write to memory");
    Ok(out.report(r).file("lambda_limit.csv", csv))
}

/// A tangential path from the origin to radius `eta`, as planar points with
/// the origin prepended.
pub fn figure_path(seed: Seed, b: &FigureBlock) -> Result<Path> {
    let t1 = b.eta * b.eta;
    let grid = make_grid(GridKind::Log, t1 * 1e-6, t1, b.steps + 1)?;
    Ok(simulate_tangential(seed, &grid, None)?.planar_path(true))
}
