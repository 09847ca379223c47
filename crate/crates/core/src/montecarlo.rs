//! Replica plumbing shared by the Monte Carlo experiments.

use rayon::prelude::*;

use crate::rng::Seed;

/// Evaluate `f` on replicas `0..n` of `seed`, one stream per replica.
///
/// Results come back in replica order regardless of scheduling.
pub fn replicate<T, F>(seed: Seed, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Seed) -> T + Sync + Send,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(seed.with_stream(i)))
        .collect()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Mean and `sd / sqrt(n)` using the unbiased sample variance.
    pub fn from_samples(xs: &[f64]) -> MeanEstimate {
        let n = xs.len();
        if n == 0 {
            return MeanEstimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn contains(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Sample Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_is_order_stable() {
        let a = replicate(Seed::new(1, 0), 64, |s| s.stream * 2);
        assert_eq!(a, (0..64).map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn mean_estimate_basic() {
        let m = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(m.contains(2.0, 1.0));
    }
}
