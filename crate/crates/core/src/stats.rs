//! Sample statistics shared across modules.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("empty sample")]
pub struct EmptySample;

/// Kolmogorov–Smirnov distance `sup_x |F_n(x) − F(x)|` between the empirical
/// distribution of `samples` and `cdf`.
pub fn ks_distance<F>(samples: &[f64], cdf: F) -> Result<f64, EmptySample>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// True when every value is identical (rounding noise in the variance is
/// ignored).
pub fn is_constant(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}
