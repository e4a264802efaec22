//! Binning and jackknife error analysis for Monte Carlo time series.

use serde::{Deserialize, Serialize};

/// Mean and standard error of one derived quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(mean: f64, error: f64) -> Self {
        Estimate { mean, error }
    }

    /// `|self - other|` in units of the combined error.
    pub fn deviation_from(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.error
    }
}

/// Average consecutive blocks of `bin_size` samples. A trailing partial
/// block is dropped.
pub fn bin_means(samples: &[f64], bin_size: usize) -> Vec<f64> {
    assert!(bin_size > 0, "bin size must be positive");
    samples
        .chunks_exact(bin_size)
        .map(|c| c.iter().sum::<f64>() / bin_size as f64)
        .collect()
}

/// Jackknife estimate of a function of the means of several primary series.
///
/// `bins[b][k]` is the bin-`b` mean of primary quantity `k`. `f` maps a
/// vector of primary means to the derived value. The reported mean is
/// `f` of the full-sample means.
pub fn jackknife<F>(bins: &[Vec<f64>], f: F) -> Estimate
where
    F: Fn(&[f64]) -> f64,
{
    let n = bins.len();
    assert!(n > 0, "jackknife needs at least one bin");
    let width = bins[0].len();
    let mut totals = vec![0.0; width];
    for bin in bins {
        for (t, x) in totals.iter_mut().zip(bin) {
            *t += x;
        }
    }
    let full: Vec<f64> = totals.iter().map(|t| t / n as f64).collect();
    let mean = f(&full);
    if n < 2 {
        return Estimate::new(mean, f64::NAN);
    }

    let mut leave_one_out = Vec::with_capacity(n);
    let mut scratch = vec![0.0; width];
    for bin in bins {
        for ((s, t), x) in scratch.iter_mut().zip(&totals).zip(bin) {
            *s = (t - x) / (n - 1) as f64;
        }
        leave_one_out.push(f(&scratch));
    }
    let avg = leave_one_out.iter().sum::<f64>() / n as f64;
    let var = leave_one_out.iter().map(|v| (v - avg).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Estimate::new(mean, var.max(0.0).sqrt())
}

/// Jackknife of a single series: reduces to the standard error of the bin means.
pub fn jackknife_mean(bins: &[f64]) -> Estimate {
    let rows: Vec<Vec<f64>> = bins.iter().map(|&b| vec![b]).collect();
    jackknife(&rows, |m| m[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::Rng;

    #[test]
    fn bins_drop_partial_tail() {
        assert_eq!(bin_means(&[1.0, 3.0, 5.0, 7.0, 9.0], 2), vec![2.0, 6.0]);
    }

    #[test]
    fn single_series_matches_standard_error() {
        let data = [1.0, 2.0, 4.0, 7.0, 11.0];
        let est = jackknife_mean(&data);
        let mean = 5.0;
        let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(est.mean, mean, epsilon = 1e-14);
        assert_abs_diff_eq!(est.error, (var / 5.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn ratio_estimator() {
        let bins = vec![vec![2.0, 1.0], vec![4.0, 1.0], vec![6.0, 2.0]];
        let est = jackknife(&bins, |m| m[0] / m[1]);
        assert_abs_diff_eq!(est.mean, 3.0, epsilon = 1e-14);
        assert!(est.error > 0.0);
    }

    #[test]
    fn error_scales_as_inverse_sqrt_of_bins() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..64_000).map(|_| rng.gen::<f64>()).collect();
        let bin_size = 10;
        let small = jackknife_mean(&bin_means(&samples[..16_000], bin_size));
        let large = jackknife_mean(&bin_means(&samples, bin_size));
        let ratio = small.error / large.error;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
        // Uniform variance 1/12.
        let expected = (1.0 / 12.0 / 64_000.0f64).sqrt();
        assert!((large.error / expected - 1.0).abs() < 0.2);
    }
}
