//! The full battery in one call.

use std::fs;
use std::io;
use std::path::Path as FsPath;

use tanlab_core::{Seed, TestReport};

use crate::checks::{self, Section};
use crate::config::{Format, RunConfig};
use crate::svg;

/// Verdicts of a suite run.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub reports: Vec<TestReport>,
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Something went wrong other than a failed check.
#[derive(Debug)]
pub enum SuiteError {
    Io(io::Error),
    Core(tanlab_core::Error),
}

impl std::fmt::Display for SuiteError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SuiteError::Io(e) => write!(f, "i/o error: {e}"),
            SuiteError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SuiteError {}

impl From<io::Error> for SuiteError {
    fn from(e: io::Error) -> Self {
        SuiteError::Io(e)
    }
}

impl From<tanlab_core::Error> for SuiteError {
    fn from(e: tanlab_core::Error) -> Self {
        SuiteError::Core(e)
    }
}

/// Run every check in `cfg` and write the results below `out`:
/// `summary.csv`, `data/*.csv` and, for `csv+svg`, `figures/*.svg`.
///
/// `progress` is called with each finished report. Nothing is written
/// outside `out`.
pub fn run_suite(
    cfg: &RunConfig,
    out: &FsPath,
    mut progress: impl FnMut(&TestReport),
) -> Result<SuiteOutcome, SuiteError> {
    let seed = Seed::new(cfg.seed, 0);
    let data = out.join("data");
    fs::create_dir_all(&data)?;

    type Job<'a> = Box<dyn Fn() -> tanlab_core::Result<Section> + 'a>;
    let jobs: Vec<Job> = vec![
        Box::new(|| checks::exact_radius(seed.derive(1), &cfg.radius)),
        Box::new(|| checks::angle_marginal(seed.derive(2), &cfg.angle)),
        Box::new(|| checks::shared_noise(seed.derive(3), &cfg.shared_noise)),
        Box::new(|| checks::reconstruction(seed.derive(4), &cfg.reconstruction)),
        Box::new(|| checks::bessel_means(seed.derive(5), &cfg.bessel)),
        Box::new(|| checks::origin_return(seed.derive(6), &cfg.origin_return)),
        Box::new(|| checks::hitting(seed.derive(7), &cfg.hitting)),
        Box::new(|| checks::scaling(seed.derive(8), &cfg.scaling)),
        Box::new(|| checks::tsirelson(seed.derive(9), &cfg.tsirelson)),
        Box::new(|| checks::tanaka(seed.derive(10), &cfg.tanaka)),
        Box::new(|| checks::control(seed.derive(11), &cfg.control)),
    ];
    let mut reports = Vec::new();
    for job in jobs {
        let section = job()?;
        for (name, bytes) in &section.files {
            fs::write(data.join(name), bytes)?;
        }
        for r in section.reports {
            progress(&r);
            reports.push(r);
        }
    }

    let path = checks::figure_path(seed.derive(12), &cfg.figure)?;
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;
    fs::write(data.join("figure_path.csv"), csv)?;
    if cfg.format == Format::CsvSvg {
        let figs = out.join("figures");
        fs::create_dir_all(&figs)?;
        let mut buf = Vec::new();
        svg::emit_scatter(&path, Some(cfg.figure.eta), &mut buf)?;
        fs::write(figs.join("trajectory.svg"), buf)?;
        let mut buf = Vec::new();
        svg::emit_radius(&path, &mut buf)?;
        fs::write(figs.join("radius.svg"), buf)?;
    }

    let mut summary = String::from(TestReport::CSV_HEADER);
    summary.push('\n');
    for r in &reports {
        summary.push_str(&r.csv_row());
        summary.push('\n');
    }
    fs::write(out.join("summary.csv"), summary)?;
    Ok(SuiteOutcome { reports })
}
