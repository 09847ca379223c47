//! Circular statistics: torus characteristic functions, Kuiper's test and
//! characteristic-function tests of independence and power-law decay.
//!
//! Every test returns a [`TestReport`]; one-sided tests pass exactly when the
//! statistic does not exceed the threshold. Characteristic-function tests use
//! the fixed band `3 / sqrt(n)`: for a sample mean of unit complex numbers the
//! fluctuation has `E|.|^2 <= 1/n`, so the band is exceeded with probability
//! about `exp(-9)` under the null.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{argument, Result};

/// Default significance level of every test in the battery.
pub const DEFAULT_SIGNIFICANCE: f64 = 0.01;

/// Angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSample {
    values: Vec<f64>,
}

impl TorusSample {
    pub fn new(values: Vec<f64>) -> Result<TorusSample> {
        if values.is_empty() {
            return argument("torus sample must be nonempty");
        }
        if let Some(x) = values.iter().find(|x| !(0.0..TAU).contains(*x)) {
            return argument(format!("torus value {x} outside [0, 2π)"));
        }
        Ok(TorusSample { values })
    }

    /// Wrap arbitrary reals onto the torus.
    pub fn from_reals(values: &[f64]) -> Result<TorusSample> {
        TorusSample::new(values.iter().map(|&x| crate::torus::wrap(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Named verdict of one statistical check.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub n: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Set when the data cannot decide the question (e.g. a degenerate
    /// single-shell characteristic function); `pass` is then false.
    pub inconclusive: bool,
    pub details: Vec<(String, String)>,
}

impl TestReport {
    /// One-sided report: passes iff `statistic <= threshold`.
    pub fn upper(name: impl Into<String>, n: usize, statistic: f64, threshold: f64) -> TestReport {
        TestReport {
            name: name.into(),
            n,
            statistic,
            threshold,
            pass: statistic <= threshold,
            inconclusive: false,
            details: Vec::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: impl ToString) -> TestReport {
        self.details.push((key.to_string(), value.to_string()));
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> TestReport {
        self.name = name.into();
        self
    }

    pub fn detail(&self, key: &str) -> Option<&str> {
        self.details
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub const CSV_HEADER: &'static str = "name,n,statistic,threshold,pass";

    /// `name,n,statistic,threshold,pass`
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{}",
            self.name,
            self.n,
            crate::path::fmt_f64(self.statistic),
            crate::path::fmt_f64(self.threshold),
            self.pass
        )
        .unwrap();
        s
    }

    /// Human-readable one-liner.
    pub fn summary_line(&self) -> String {
        let verdict = if self.pass {
            "PASS"
        } else if self.inconclusive {
            "INCONCLUSIVE"
        } else {
            "FAIL"
        };
        format!(
            "[{verdict}] {} (n={}, statistic={:.6}, threshold={:.6})",
            self.name, self.n, self.statistic, self.threshold
        )
    }
}

/// Empirical characteristic function `(1/n) sum exp(i k x_j)`.
///
/// Works on any reals; an integer frequency makes the result depend only on
/// the values mod 2π. `k = 0` returns exactly 1.
pub fn torus_ecf(k: i32, values: &[f64]) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    real_ecf(k as f64, values)
}

/// Empirical characteristic function at an arbitrary real frequency.
pub fn real_ecf(freq: f64, values: &[f64]) -> Complex64 {
    let n = values.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for &x in values {
        let (s, c) = (freq * x).sin_cos();
        re += c;
        im += s;
    }
    Complex64::new(re / n, im / n)
}

/// Magnitude of the ECF with a delta-method standard error.
///
/// The standard error is the sample deviation of the unit vectors projected
/// on the direction of their mean, divided by `sqrt(n)`.
pub fn ecf_magnitude(k: i32, values: &[f64]) -> (f64, f64) {
    let phi = torus_ecf(k, values);
    let mag = phi.norm();
    let arg = phi.arg();
    let n = values.len() as f64;
    let var = values
        .iter()
        .map(|&x| ((k as f64) * x - arg).cos() - mag)
        .map(|d| d * d)
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    (mag, (var / n).sqrt())
}

/// Kuiper's asymptotic tail `Q(λ) = 2 sum_j (4 j² λ² - 1) exp(-2 j² λ²)`.
fn kuiper_tail(lambda: f64) -> f64 {
    if lambda < 0.4 {
        return 1.0;
    }
    let l2 = lambda * lambda;
    let mut sum = 0.0;
    for j in 1..=100 {
        let j2 = (j * j) as f64;
        let term = (4.0 * j2 * l2 - 1.0) * (-2.0 * j2 * l2).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn kuiper_scale(n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    sn + 0.155 + 0.24 / sn
}

/// Critical value of Kuiper's V for `n` points at `significance`.
pub fn kuiper_critical_value(n: usize, significance: f64) -> f64 {
    // Q is decreasing on [0.4, 5]; bisect Q(λ) = significance.
    let (mut lo, mut hi) = (0.4_f64, 5.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kuiper_tail(mid) > significance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / kuiper_scale(n)
}

/// Kuiper's V statistic of a torus sample against the uniform law.
pub fn kuiper_statistic(sample: &TorusSample) -> f64 {
    let mut u: Vec<f64> = sample.values().iter().map(|x| x / TAU).collect();
    u.sort_by(|a, b| a.total_cmp(b));
    let n = u.len() as f64;
    let mut d_plus = 0.0_f64;
    let mut d_minus = 0.0_f64;
    for (i, &ui) in u.iter().enumerate() {
        d_plus = d_plus.max((i + 1) as f64 / n - ui);
        d_minus = d_minus.max(ui - i as f64 / n);
    }
    d_plus + d_minus
}

/// Rotation-invariant test of uniformity on `[0, 2π)`.
pub fn kuiper_test(sample: &TorusSample, significance: f64) -> Result<TestReport> {
    let n = sample.len();
    if n < 8 {
        return argument(format!("Kuiper test needs n >= 8, got {n}"));
    }
    if !(0.0..1.0).contains(&significance) || significance == 0.0 {
        return argument(format!(
            "significance must be in (0, 1), got {significance}"
        ));
    }
    let v = kuiper_statistic(sample);
    let crit = kuiper_critical_value(n, significance);
    Ok(TestReport::upper("kuiper_uniformity", n, v, crit)
        .with_detail("p_value", kuiper_tail(kuiper_scale(n) * v))
        .with_detail("significance", significance))
}

/// Factorisation test `|E[e_k(a) e_m(b)] - E[e_k(a)] E[e_m(b)]| <= 3/sqrt(n)`
/// on paired samples.
pub fn ecf_independence(a: &[f64], b: &[f64], k: i32, m: i32) -> Result<TestReport> {
    if a.len() != b.len() {
        return argument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        ));
    }
    if a.is_empty() {
        return argument("paired samples must be nonempty");
    }
    let n = a.len();
    let joint: Complex64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| Complex64::from_polar(1.0, k as f64 * x + m as f64 * y))
        .sum::<Complex64>()
        / n as f64;
    let product = torus_ecf(k, a) * torus_ecf(m, b);
    let stat = (joint - product).norm();
    Ok(
        TestReport::upper("ecf_independence", n, stat, 3.0 / (n as f64).sqrt())
            .with_detail("k", k)
            .with_detail("m", m),
    )
}

/// Two-sample agreement in law: `max_k |ECF_a(k) - ECF_b(k)| <= 3/sqrt(n)`.
pub fn ecf_two_sample(a: &[f64], b: &[f64], ks: &[i32]) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() || ks.is_empty() {
        return argument("two-sample test needs nonempty samples and frequencies");
    }
    let n = a.len().min(b.len());
    let mut report = TestReport::upper("ecf_two_sample", n, 0.0, 3.0 / (n as f64).sqrt());
    let mut worst = 0.0_f64;
    for &k in ks {
        let d = (torus_ecf(k, a) - torus_ecf(k, b)).norm();
        worst = worst.max(d);
        report = report.with_detail(&format!("distance_k{k}"), d);
    }
    report.statistic = worst;
    report.pass = worst <= report.threshold;
    Ok(report)
}

/// Power-law decay of the ECF of a sum of i.i.d. shell increments.
///
/// `shells[j]` holds the `N` shell increments of replica `j`. With
/// `m_l = |ECF_k(sum of the first l shells)|`, i.i.d. shells give
/// `m_l = m_1^l`, so `log m_l` is linear in `l` with slope `log m_1`. The
/// statistic is the relative error of the least-squares slope through the
/// origin, over levels whose magnitude clears the `3/sqrt(n)` noise floor;
/// the threshold is 0.2.
///
/// When the single-shell magnitude is within 5 standard errors of 1 the
/// increments are numerically degenerate and the report is inconclusive.
/// When it is already below the noise floor, both sides are indistinguishable
/// from 0 and the report passes iff the N-shell magnitude is too.
pub fn dyadic_decay(shells: &[Vec<f64>], k: i32) -> Result<TestReport> {
    let n = shells.len();
    if n < 2 {
        return argument("dyadic decay needs at least two replicas");
    }
    let levels = shells[0].len();
    if levels < 2 {
        return argument(format!("dyadic decay needs N >= 2 shells, got {levels}"));
    }
    if shells.iter().any(|s| s.len() != levels) {
        return argument("every replica must carry the same number of shells");
    }
    let floor = 3.0 / (n as f64).sqrt();
    let mut partial = vec![0.0; n];
    let mut mags = Vec::with_capacity(levels);
    let mut single_stderr = 0.0;
    for l in 0..levels {
        for (p, s) in partial.iter_mut().zip(shells) {
            *p += s[l];
        }
        let (mag, se) = ecf_magnitude(k, &partial);
        if l == 0 {
            single_stderr = se;
        }
        mags.push(mag);
    }
    let m1 = mags[0];
    let predicted = m1.powi(levels as i32);
    let base = |r: TestReport| {
        r.with_detail("k", k)
            .with_detail("levels", levels)
            .with_detail("single_shell_magnitude", m1)
            .with_detail("single_shell_stderr", single_stderr)
            .with_detail("n_shell_magnitude", mags[levels - 1])
            .with_detail("predicted_n_shell_magnitude", predicted)
    };

    if 1.0 - m1 < 5.0 * single_stderr.max(f64::EPSILON) {
        let mut r = base(TestReport::upper("dyadic_decay", n, f64::NAN, 0.2));
        r.pass = false;
        r.inconclusive = true;
        return Ok(r.with_detail("reason", "single-shell magnitude indistinguishable from 1"));
    }
    if m1 < floor {
        let r = TestReport::upper("dyadic_decay", n, mags[levels - 1], floor);
        return Ok(base(r).with_detail("reason", "single shell already at noise floor"));
    }
    let usable: Vec<(f64, f64)> = mags
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > floor)
        .map(|(l, &m)| ((l + 1) as f64, m.ln()))
        .collect();
    let slope = usable.iter().map(|(l, y)| l * y).sum::<f64>()
        / usable.iter().map(|(l, _)| l * l).sum::<f64>();
    let rel = (slope / m1.ln() - 1.0).abs();
    Ok(base(TestReport::upper("dyadic_decay", n, rel, 0.2))
        .with_detail("fit_levels", usable.len())
        .with_detail("slope", slope)
        .with_detail("log_single_shell", m1.ln()))
}
