//! Summary statistics for Monte Carlo output.

use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided normal critical value, e.g. `z(0.95) = 1.959...`.
pub fn z(level: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean, treating `xs` as independent.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Means of `batches` contiguous blocks of (nearly) equal size.
pub fn batch_means(xs: &[f64], batches: usize) -> Vec<f64> {
    let batches = batches.clamp(1, xs.len().max(1));
    (0..batches)
        .map(|b| {
            let lo = b * xs.len() / batches;
            let hi = (b + 1) * xs.len() / batches;
            mean(&xs[lo..hi])
        })
        .collect()
}

/// Confidence half-width of the mean of `xs` from the spread of its batch
/// means.
pub fn batch_means_halfwidth(xs: &[f64], batches: usize, level: f64) -> f64 {
    let bm = batch_means(xs, batches);
    if bm.len() < 2 {
        return 0.0;
    }
    z(level) * standard_error(&bm)
}

pub fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Half-widths combined in quadrature.
pub fn quadrature(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        assert!((z(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((z(0.99) - 2.575_829_303_548_901).abs() < 1e-9);
    }

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(batch_means(&xs, 2), vec![1.5, 3.5]);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn batches_cover_everything() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let bm = batch_means(&xs, 3);
        assert_eq!(bm.len(), 3);
        assert_eq!(bm, vec![1.0, 4.0, 7.5]);
    }
}
