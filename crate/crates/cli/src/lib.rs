//! Command-line front end: argument parsing, the suite runner and file
//! output. The binary is a thin wrapper around [`run`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod suite;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};

use tanlab_core::classics::{simulate_tanaka, simulate_tsirelson, TsirelsonConfig, ZeroSign};
use tanlab_core::control::{
    cost_estimate, dpp_origin_check, lambda_limit_experiment, write_lambda_limit_csv, CostSettings,
    RadialCost, Strategy,
};
use tanlab_core::lambda::{
    return_to_origin_experiment, simulate_lambda, LambdaParams, LambdaStart, OriginReturnConfig,
    CRITICAL_LAMBDA,
};
use tanlab_core::path::fmt_f64;
use tanlab_core::tangential::simulate_tangential;
use tanlab_core::{make_grid, GridKind, Path, PathValues, Seed, TestReport, TimeGrid};

pub use config::{ConfigError, Format, RunConfig};
pub use suite::{run_suite, SuiteError, SuiteOutcome};

/// Every check passed.
pub const EXIT_PASS: i32 = 0;
/// At least one check failed.
pub const EXIT_FAIL: i32 = 1;
/// Bad arguments, bad configuration or an input error.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tanlab",
    version,
    about = "Simulations and checks for tangential motion and its relatives"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate paths and write them as CSV.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Run one statistical check.
    #[command(subcommand)]
    Test(TestCmd),
    /// Run an experiment and write its table.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Control costs.
    #[command(subcommand)]
    Control(ControlCmd),
    /// The full acceptance battery.
    #[command(subcommand)]
    Suite(SuiteCmd),
    /// Trajectory and radius figures of a tangential path (or of a CSV path).
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the output files; stdout when omitted (one replica only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    Tangential {
        #[arg(long, default_value_t = 0.01)]
        t0: f64,
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[command(flatten)]
        common: Common,
    },
    Lambda {
        #[arg(long)]
        lambda: f64,
        /// First grid time; defaults to `1e-6 * t1`.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Start radius at `t0`; from the origin when omitted.
        #[arg(long)]
        r0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    Tanaka {
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Use sign(0) = +1 instead of following the increment.
        #[arg(long)]
        sign_plus: bool,
        #[command(flatten)]
        common: Common,
    },
    Tsirelson {
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 16)]
        substeps: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// On stdout, print the per-interval levels instead of the path.
        #[arg(long)]
        levels: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
pub enum TestCmd {
    /// Kuiper uniformity of the angle at time e^s.
    Uniformity {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        significance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Independence of the angle at e^s from three increments.
    Independence {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scale invariance of angle increments, with a negative control.
    Scaling {
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        rho0: f64,
        #[arg(long, default_value_t = 1.0)]
        rho1: f64,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Near-origin visits: rare below the critical λ, certain above it.
    OriginReturn {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Angle at radius hitting times.
    AngleHitting {
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// Table of near-origin visit frequencies.
    OriginReturn {
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.001")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 0.01)]
        kappa: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// `constant:c`, `power:p` or `table:r/f,r/f,...`.
    #[arg(long = "f", default_value = "power:-1")]
    pub f: String,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long = "R")]
    pub big_r: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum ControlCmd {
    /// Monte Carlo cost of one strategy from `start` to `eta`.
    Cost {
        /// `radial`, `tangential`, `lambda:L` or `switch:RHO:INNER:OUTER`.
        #[arg(long, default_value = "tangential")]
        strategy: String,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Additivity of tangential cost across radius `eta` up to `R`.
    DppCheck {
        #[command(flatten)]
        cost: CostArgs,
    },
    /// λ-family costs against the tangential closed form.
    LambdaLimit {
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.1")]
        lambdas: Vec<f64>,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SuiteCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Output directory for `trajectory.svg` and `radius.svg`.
    #[arg(long)]
    pub out: PathBuf,
    /// Plot columns `t`, `x1`, `x2` (or `t`, `v1`, `v2`) of this CSV instead
    /// of simulating.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Exit radius of the simulated path.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Circle radius drawn around the origin; `eta` for simulated paths.
    #[arg(long)]
    pub circle: Option<f64>,
}

/// A failure that maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type CmdResult = Result<i32, UsageError>;

/// Parse `args` (including the program name) and execute. Returns the exit
/// code; reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_PASS
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Simulate(c) => simulate(c, stdout),
        Command::Test(c) => test(c, stdout),
        Command::Experiment(c) => experiment(c, stdout),
        Command::Control(c) => control(c, stdout),
        Command::Suite(SuiteCmd::Run { config, out }) => suite_run(&config, out, stdout, stderr),
        Command::Plot(a) => plot(a),
    }
}

fn suite_run(
    config: &FsPath,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let cfg = RunConfig::load(config)?;
    let dir = out.or_else(|| cfg.output.clone()).ok_or_else(|| {
        UsageError("no output directory: pass --out or set `output` in the config".into())
    })?;
    let outcome = run_suite(&cfg, &dir, |r| {
        let _ = writeln!(stdout, "{}", r.summary_line());
    })?;
    let failed = outcome.reports.iter().filter(|r| !r.pass).count();
    let _ = writeln!(
        stderr,
        "{} checks, {} failed; summary in {}",
        outcome.reports.len(),
        failed,
        dir.join("summary.csv").display()
    );
    Ok(outcome.exit_code())
}

/// Write `replicas` CSV files named `{stem}_{i:04}.csv` into `out`, or the
/// single replica to stdout.
fn emit_replicas(
    common: &Common,
    replicas: usize,
    stem: &str,
    stdout: &mut dyn Write,
    mut one: impl FnMut(Seed, &mut Vec<u8>) -> Result<(), UsageError>,
) -> CmdResult {
    if replicas == 0 {
        return Err(UsageError("--replicas must be at least 1".into()));
    }
    let seed = Seed::new(common.seed, 0);
    match &common.out {
        None => {
            if replicas > 1 {
                return Err(UsageError(
                    "--out is required for more than one replica".into(),
                ));
            }
            let mut buf = Vec::new();
            one(seed, &mut buf)?;
            stdout.write_all(&buf)?;
        }
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for i in 0..replicas {
                let mut buf = Vec::new();
                one(seed.with_stream(i as u64), &mut buf)?;
                fs::write(dir.join(format!("{stem}_{i:04}.csv")), buf)?;
            }
        }
    }
    Ok(EXIT_PASS)
}

fn simulate(cmd: SimulateCmd, stdout: &mut dyn Write) -> CmdResult {
    match cmd {
        SimulateCmd::Tangential {
            t0,
            t1,
            steps,
            replicas,
            common,
        } => {
            let grid = make_grid(GridKind::Log, t0, t1, steps + 1)?;
            emit_replicas(&common, replicas, "tangential", stdout, |s, buf| {
                simulate_tangential(s, &grid, None)?.write_csv(buf)?;
                Ok(())
            })
        }
        SimulateCmd::Lambda {
            lambda,
            t0,
            t1,
            steps,
            replicas,
            r0,
            common,
        } => {
            let params = LambdaParams::new(lambda)?;
            let grid = make_grid(GridKind::Log, t0.unwrap_or(1e-6 * t1), t1, steps + 1)?;
            let start = r0.map_or(LambdaStart::Origin, LambdaStart::Radius);
            emit_replicas(&common, replicas, "lambda", stdout, |s, buf| {
                simulate_lambda(s, params, &grid, start, None)?.write_csv(buf)?;
                Ok(())
            })
        }
        SimulateCmd::Tanaka {
            t1,
            steps,
            replicas,
            sign_plus,
            common,
        } => {
            let grid = make_grid(GridKind::Uniform, 0.0, t1, steps + 1)?;
            let zero = if sign_plus {
                ZeroSign::Plus
            } else {
                ZeroSign::FollowIncrement
            };
            emit_replicas(&common, replicas, "tanaka", stdout, |s, buf| {
                simulate_tanaka(s, &grid, zero)?.write_csv(buf)?;
                Ok(())
            })
        }
        SimulateCmd::Tsirelson {
            depth,
            substeps,
            replicas,
            levels,
            common,
        } => {
            let cfg = TsirelsonConfig::dyadic(depth, substeps)?;
            if let Some(dir) = &common.out {
                if replicas == 0 {
                    return Err(UsageError("--replicas must be at least 1".into()));
                }
                fs::create_dir_all(dir)?;
                for i in 0..replicas {
                    let p = simulate_tsirelson(Seed::new(common.seed, i as u64), &cfg)?;
                    let mut buf = Vec::new();
                    p.write_csv(&mut buf)?;
                    fs::write(dir.join(format!("tsirelson_{i:04}.csv")), buf)?;
                    let mut buf = Vec::new();
                    p.write_levels_csv(&mut buf)?;
                    fs::write(dir.join(format!("tsirelson_levels_{i:04}.csv")), buf)?;
                }
                return Ok(EXIT_PASS);
            }
            emit_replicas(&common, replicas, "tsirelson", stdout, |s, buf| {
                let p = simulate_tsirelson(s, &cfg)?;
                if levels {
                    p.write_levels_csv(buf)?;
                } else {
                    p.write_csv(buf)?;
                }
                Ok(())
            })
        }
    }
}

fn print_reports(reports: &[TestReport], stdout: &mut dyn Write) -> CmdResult {
    for r in reports {
        writeln!(stdout, "{}", r.summary_line())?;
    }
    Ok(if reports.iter().all(|r| r.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn test(cmd: TestCmd, stdout: &mut dyn Write) -> CmdResult {
    let reports = match cmd {
        TestCmd::Uniformity {
            s,
            n,
            significance,
            seed,
        } => {
            let b = config::AngleBlock {
                s_values: vec![s],
                n,
                significance,
                independence_s: s,
                burn_in: 40.0,
            };
            let cfg = RunConfig {
                angle: b,
                ..Default::default()
            };
            cfg.validate()?;
            let mut r = checks::angle_marginal(Seed::new(seed, 0), &cfg.angle)?.reports;
            r.truncate(1);
            r
        }
        TestCmd::Independence { s, n, seed } => {
            let b = config::AngleBlock {
                s_values: vec![s],
                n,
                significance: 0.01,
                independence_s: s,
                burn_in: 40.0,
            };
            let cfg = RunConfig {
                angle: b,
                ..Default::default()
            };
            cfg.validate()?;
            checks::angle_marginal(Seed::new(seed, 0), &cfg.angle)?
                .reports
                .split_off(1)
        }
        TestCmd::Scaling {
            lambda,
            rho0,
            rho1,
            alpha,
            n,
            seed,
        } => {
            let b = config::ScalingBlock {
                lambda,
                rho0,
                rho1,
                alpha,
                n,
                control_rho1: 2.0 * rho1,
            };
            let cfg = RunConfig {
                scaling: b,
                ..Default::default()
            };
            cfg.validate()?;
            checks::scaling(Seed::new(seed, 0), &cfg.scaling)?.reports
        }
        TestCmd::OriginReturn {
            lambda,
            eps,
            horizon,
            r0,
            n,
            seed,
        } => {
            let params = LambdaParams::new(lambda)?;
            if !(eps > 0.0 && eps < r0) {
                return Err(UsageError(format!("--eps must lie in (0, r0), got {eps}")));
            }
            let cfg = OriginReturnConfig {
                r0,
                horizon,
                epsilons: vec![eps],
                n,
                kappa: 0.01,
            };
            let res = return_to_origin_experiment(Seed::new(seed, 0), params, &cfg)?;
            let m = res.rows[0].1;
            let r = if lambda <= CRITICAL_LAMBDA {
                TestReport::upper("origin_return_polar", n, m.mean, 0.05)
            } else {
                let mut r = TestReport::upper("origin_return_recurrent", n, m.mean, 0.95)
                    .with_detail("direction", "lower");
                r.pass = m.mean >= 0.95;
                r
            };
            vec![r.with_detail("exact_zero_hit", res.exact_zero_hit)]
        }
        TestCmd::AngleHitting {
            lambda,
            rho,
            n,
            levels,
            seed,
        } => {
            let b = config::HittingBlock {
                lambda,
                rho,
                n,
                levels,
                ..Default::default()
            };
            let cfg = RunConfig {
                hitting: b,
                ..Default::default()
            };
            cfg.validate()?;
            checks::hitting(Seed::new(seed, 0), &cfg.hitting)?.reports
        }
    };
    print_reports(&reports, stdout)
}

fn write_table(
    out: Option<&FsPath>,
    bytes: &[u8],
    stdout: &mut dyn Write,
) -> Result<(), UsageError> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn experiment(cmd: ExperimentCmd, stdout: &mut dyn Write) -> CmdResult {
    let ExperimentCmd::OriginReturn {
        lambda,
        eps,
        horizon,
        r0,
        kappa,
        n,
        seed,
        out,
    } = cmd;
    let cfg = OriginReturnConfig {
        r0,
        horizon,
        epsilons: eps,
        n,
        kappa,
    };
    let mut csv = String::from("lambda,eps,horizon,estimate,stderr,n,exact_zero_hit\n");
    for (i, &l) in lambda.iter().enumerate() {
        let res = return_to_origin_experiment(
            Seed::new(seed, 0).derive(i as u64),
            LambdaParams::new(l)?,
            &cfg,
        )?;
        for (e, m) in &res.rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_f64(l),
                fmt_f64(*e),
                fmt_f64(horizon),
                fmt_f64(m.mean),
                fmt_f64(m.stderr),
                m.n,
                fmt_f64(res.exact_zero_hit)
            ));
        }
    }
    write_table(out.as_deref(), csv.as_bytes(), stdout)?;
    Ok(EXIT_PASS)
}

/// Parse `constant:c`, `power:p` or `table:r/f,r/f,...` on `(0, domain]`.
pub fn parse_cost(text: &str, domain: f64) -> Result<RadialCost, UsageError> {
    let (kind, arg) = text
        .split_once(':')
        .ok_or_else(|| UsageError(format!("cost {text:?} must look like kind:value")))?;
    let num = |s: &str| -> Result<f64, UsageError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| UsageError(format!("not a number: {s:?}")))
    };
    Ok(match kind {
        "constant" | "const" => RadialCost::constant(num(arg)?, domain)?,
        "power" => RadialCost::power(num(arg)?, domain)?,
        "table" => {
            let mut pts = Vec::new();
            for pair in arg.split(',') {
                let (r, f) = pair
                    .split_once('/')
                    .ok_or_else(|| UsageError(format!("table entry {pair:?} must be r/f")))?;
                pts.push((num(r)?, num(f)?));
            }
            RadialCost::tabulated(pts, domain)?
        }
        _ => return Err(UsageError(format!("unknown cost family {kind:?}"))),
    })
}

fn parse_simple_strategy(s: &str) -> Result<Strategy, UsageError> {
    match s {
        "radial" => Ok(Strategy::Radial),
        "tangential" => Ok(Strategy::Tangential),
        _ => match s.strip_prefix("lambda") {
            Some(rest) => {
                let l = rest.trim_start_matches(['=', ':']);
                let l: f64 = l
                    .parse()
                    .map_err(|_| UsageError(format!("bad lambda in {s:?}")))?;
                Ok(Strategy::Lambda(l))
            }
            None => Err(UsageError(format!("unknown strategy {s:?}"))),
        },
    }
}

/// Parse `radial`, `tangential`, `lambda:L` or `switch:RHO:INNER:OUTER`.
pub fn parse_strategy(text: &str) -> Result<Strategy, UsageError> {
    if let Some(rest) = text.strip_prefix("switch:") {
        let parts: Vec<&str> = rest.splitn(2, ':').collect();
        if parts.len() != 2 {
            return Err(UsageError(format!(
                "switch strategy {text:?} must be switch:RHO:INNER:OUTER"
            )));
        }
        let rho: f64 = parts[0]
            .parse()
            .map_err(|_| UsageError(format!("bad switch radius in {text:?}")))?;
        // the inner leg may itself carry a parameter, e.g. lambda:0.5:radial
        let tail = parts[1];
        let split = if tail.starts_with("lambda:") {
            tail.match_indices(':').nth(1).map(|(i, _)| i)
        } else {
            tail.find(':')
        }
        .ok_or_else(|| {
            UsageError(format!(
                "switch strategy {text:?} needs inner and outer legs"
            ))
        })?;
        let inner = parse_simple_strategy(&tail[..split])?;
        let outer = parse_simple_strategy(&tail[split + 1..])?;
        return Ok(Strategy::SwitchAtRadius {
            rho,
            inner: Box::new(inner),
            outer: Box::new(outer),
        });
    }
    parse_simple_strategy(text)
}

fn control(cmd: ControlCmd, stdout: &mut dyn Write) -> CmdResult {
    let settings = CostSettings::default();
    match cmd {
        ControlCmd::Cost {
            strategy,
            start,
            cost,
        } => {
            let domain = cost.big_r.unwrap_or(cost.eta);
            let f = parse_cost(&cost.f, domain)?;
            let st = parse_strategy(&strategy)?;
            let e = cost_estimate(
                Seed::new(cost.seed, 0),
                &st,
                &f,
                start,
                cost.eta,
                cost.n,
                &settings,
            )?;
            writeln!(
                stdout,
                "strategy,start,stop,mean,stderr,n,truncated,blow_ups,unfinished"
            )?;
            writeln!(
                stdout,
                "{},{},{},{},{},{},{},{},{}",
                strategy,
                fmt_f64(start),
                fmt_f64(cost.eta),
                fmt_f64(e.mean),
                fmt_f64(e.stderr),
                e.n,
                e.truncated,
                e.blow_ups,
                e.unfinished
            )?;
            Ok(EXIT_PASS)
        }
        ControlCmd::DppCheck { cost } => {
            let big_r = cost.big_r.unwrap_or(cost.eta);
            let f = parse_cost(&cost.f, big_r)?;
            let r = dpp_origin_check(
                Seed::new(cost.seed, 0),
                &f,
                cost.eta,
                big_r,
                cost.n,
                &settings,
            )?;
            print_reports(&[r], stdout)
        }
        ControlCmd::LambdaLimit { lambdas, cost, out } => {
            let f = parse_cost(&cost.f, cost.big_r.unwrap_or(cost.eta))?;
            let rows = lambda_limit_experiment(
                Seed::new(cost.seed, 0),
                &f,
                cost.eta,
                &lambdas,
                cost.n,
                &settings,
            )?;
            let mut buf = Vec::new();
            write_lambda_limit_csv(&rows, &mut buf)?;
            write_table(out.as_deref(), &buf, stdout)?;
            Ok(EXIT_PASS)
        }
    }
}

/// Read columns `t` and `x1,x2` (or `v1,v2`) from a path CSV.
pub fn read_planar_csv(text: &str) -> Result<Path, UsageError> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .collect();
    let col = |names: &[&str]| {
        names
            .iter()
            .find_map(|n| header.iter().position(|h| h == n))
    };
    let (ti, xi, yi) = match (col(&["t"]), col(&["x1", "v1"]), col(&["x2", "v2"])) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(UsageError(
                "CSV needs columns t, x1, x2 (or t, v1, v2)".into(),
            ))
        }
    };
    let (mut ts, mut pts) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<f64, UsageError> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| UsageError(format!("bad value on data line {}", k + 1)))
        };
        ts.push(get(ti)?);
        pts.push([get(xi)?, get(yi)?]);
    }
    if pts.is_empty() {
        return Err(UsageError("CSV has no data rows".into()));
    }
    if pts.len() == 1 {
        // a grid needs two times; repeat the point a unit later
        ts.push(ts[0] + 1.0);
        pts.push(pts[0]);
    }
    Ok(Path::new(
        TimeGrid::from_times(ts)?,
        PathValues::Planar(pts),
    )?)
}

fn plot(a: PlotArgs) -> CmdResult {
    let (path, circle) = match &a.input {
        Some(file) => (read_planar_csv(&fs::read_to_string(file)?)?, a.circle),
        None => {
            let fig = config::FigureBlock {
                eta: a.eta,
                steps: a.steps,
            };
            let cfg = RunConfig {
                figure: fig,
                ..Default::default()
            };
            cfg.validate()?;
            (
                checks::figure_path(Seed::new(a.seed, 0), &cfg.figure)?,
                Some(a.circle.unwrap_or(a.eta)),
            )
        }
    };
    fs::create_dir_all(&a.out)?;
    let mut buf = Vec::new();
    svg::emit_scatter(&path, circle, &mut buf)?;
    fs::write(a.out.join("trajectory.svg"), buf)?;
    let mut buf = Vec::new();
    svg::emit_radius(&path, &mut buf)?;
    fs::write(a.out.join("radius.svg"), buf)?;
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("tanlab").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn strategies_parse() {
        assert_eq!(parse_strategy("radial").unwrap(), Strategy::Radial);
        assert_eq!(parse_strategy("lambda:0.5").unwrap(), Strategy::Lambda(0.5));
        assert_eq!(
            parse_strategy("switch:0.5:lambda:0.25:radial").unwrap(),
            Strategy::SwitchAtRadius {
                rho: 0.5,
                inner: Box::new(Strategy::Lambda(0.25)),
                outer: Box::new(Strategy::Radial)
            }
        );
        assert!(parse_strategy("switch:0.5:radial").is_err());
        assert!(parse_strategy("spiral").is_err());
    }

    #[test]
    fn costs_parse() {
        assert_eq!(parse_cost("power:-1", 1.0).unwrap().eval(0.5), 2.0);
        assert_eq!(parse_cost("constant:3", 1.0).unwrap().eval(0.5), 3.0);
        assert!(parse_cost("table:0.5/2,1/1", 1.0).is_ok());
        assert!(parse_cost("power", 1.0).is_err());
        assert!(parse_cost("wave:1", 1.0).is_err());
    }

    #[test]
    fn bad_arguments_exit_2() {
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(
            run_args(&["simulate", "lambda", "--lambda", "1.5"]).0,
            EXIT_USAGE
        );
        let (code, _, err) = run_args(&["simulate", "tangential", "--t0", "0", "--steps", "4"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("error"));
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_PASS);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn simulate_to_stdout() {
        let (code, out, _) = run_args(&["simulate", "tangential", "--steps", "4", "--seed", "3"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "t,theta,lifted,b,x1,x2");
        assert_eq!(lines.len(), 6);
        let (code, out, _) = run_args(&[
            "simulate",
            "tsirelson",
            "--depth",
            "2",
            "--substeps",
            "2",
            "--levels",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("k,t_k,b_k"));
        assert_eq!(
            run_args(&["simulate", "tanaka", "--replicas", "2"]).0,
            EXIT_USAGE
        );
    }

    #[test]
    fn planar_csv_roundtrip() {
        let p = read_planar_csv("t,x1,x2\n0,0,0\n1,1,0\n2,0,1\n").unwrap();
        assert_eq!(p.len(), 3);
        assert!(read_planar_csv("t,x1,x2\n").is_err());
        assert!(read_planar_csv("a,b\n1,2\n").is_err());
        assert_eq!(read_planar_csv("t,v1,v2\n0,1,1\n").unwrap().len(), 2);
    }
}
