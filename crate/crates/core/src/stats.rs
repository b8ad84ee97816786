//! Small deterministic reductions used by the Monte Carlo code.

use crate::special::normal_cdf;

/// Neumaier-compensated running sum. Summation order is the caller's
/// iteration order, so identical inputs give identical bits.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Mean and standard error of the mean, summed in slice order.
///
/// Returns `(NaN, NaN)` on an empty slice; the standard error is zero for a
/// single sample.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = CompensatedSum::new();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut ss = CompensatedSum::new();
    xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
    let var = ss.value() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let (_, se) = mean_and_stderr(xs);
    se * se * xs.len() as f64
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the standard normal.
pub fn ks_distance_normal(samples: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}
