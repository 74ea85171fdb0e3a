//! Maximum-likelihood fit of a standardised CTS law.

use serde::{Deserialize, Serialize};

use super::grid::{CtsDistribution, GridOptions, PdfTable};
use super::{standardize, CtsError, StdCtsParams};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::stats::{is_constant, ks_distance};

/// Density floor inside the log-likelihood.
const PDF_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Closed bounds on the tail index.
    pub alpha_bounds: (f64, f64),
    /// Closed bounds on both decay rates.
    pub lambda_bounds: (f64, f64),
    /// Starting shapes `(α, λ₊, λ₋)`.
    pub starts: Vec<[f64; 3]>,
    pub grid: GridOptions,
    pub min_samples: usize,
    pub simplex: NelderMeadOptions,
    /// Restart each search once at its optimum with a smaller simplex.
    pub polish: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            alpha_bounds: (0.05, 2.0 - 1e-6),
            lambda_bounds: (0.1, 50.0),
            starts: vec![[0.5, 1.0, 1.0], [1.0, 1.5, 1.5], [1.5, 2.5, 2.5]],
            grid: GridOptions {
                n_points: 1 << 14,
                max_spacing_sd: 0.02,
                max_points: 1 << 15,
                ..GridOptions::default()
            },
            min_samples: crate::MIN_OBSERVATIONS,
            simplex: NelderMeadOptions {
                max_evaluations: 600,
                value_tolerance: 1e-10,
                step_tolerance: 1e-5,
                initial_step: 0.3,
            },
            polish: true,
        }
    }
}

impl FitOptions {
    /// Cheaper settings for the many short-window fits of a backtest: a
    /// coarser density grid and a single simplex pass per start.
    pub fn coarse() -> Self {
        let base = Self::default();
        Self {
            grid: GridOptions {
                n_points: 1 << 11,
                max_spacing_sd: 0.1,
                max_points: 1 << 12,
                ..base.grid
            },
            simplex: NelderMeadOptions {
                max_evaluations: 300,
                value_tolerance: 1e-8,
                ..base.simplex
            },
            polish: false,
            ..base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtsFit {
    pub params: StdCtsParams,
    /// Total log-likelihood of the samples.
    pub log_likelihood: f64,
    /// Kolmogorov–Smirnov distance between the samples and the fitted law.
    pub ks: f64,
}

/// Mean negative log-likelihood at shape `(α, ln λ₊, ln λ₋)`.
fn objective(samples: &[f64], point: &[f64], grid: &GridOptions) -> f64 {
    let Ok(shape) = standardize(point[0], point[1].exp(), point[2].exp()) else {
        return f64::INFINITY;
    };
    let Ok(table) = PdfTable::build(&shape.to_cts(), grid) else {
        return f64::INFINITY;
    };
    -samples
        .iter()
        .map(|&x| table.pdf(x).max(PDF_FLOOR).ln())
        .sum::<f64>()
        / samples.len() as f64
}

/// Keeps the better of `best` and `candidate`; near-ties go to the smaller α.
fn consider(best: &mut Option<(Vec<f64>, f64)>, candidate: crate::optimize::Minimum) {
    if !candidate.value.is_finite() {
        return;
    }
    let replace = match best {
        None => true,
        Some((x, v)) => {
            if (candidate.value - *v).abs() <= 1e-9 * v.abs().max(1.0) {
                candidate.x[0] < x[0]
            } else {
                candidate.value < *v
            }
        }
    };
    if replace {
        *best = Some((candidate.x, candidate.value));
    }
}

/// Fits `(α, λ₊, λ₋)` of a standardised CTS law to `samples` by maximum
/// likelihood, using a bounded simplex search from each start (restarted once
/// at its optimum). The best likelihood wins; near-ties go to the smaller α.
pub fn fit_mle(samples: &[f64], options: &FitOptions) -> Result<CtsFit, CtsError> {
    if samples.len() < options.min_samples {
        return Err(CtsError::TooFewSamples {
            got: samples.len(),
            need: options.min_samples,
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(CtsError::OptimizerDiverged("non-finite sample".into()));
    }
    if is_constant(samples) {
        return Err(CtsError::OptimizerDiverged("zero-variance sample".into()));
    }

    let (a_lo, a_hi) = options.alpha_bounds;
    let (l_lo, l_hi) = (options.lambda_bounds.0.ln(), options.lambda_bounds.1.ln());
    let lower = [a_lo, l_lo, l_lo];
    let upper = [a_hi, l_hi, l_hi];
    let f = |p: &[f64]| objective(samples, p, &options.grid);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &options.starts {
        let x0 = [start[0], start[1].ln(), start[2].ln()];
        let first = nelder_mead(f, &x0, &lower, &upper, &options.simplex);
        if !options.polish {
            consider(&mut best, first);
            continue;
        }
        let refined = nelder_mead(
            f,
            &first.x,
            &lower,
            &upper,
            &NelderMeadOptions {
                initial_step: 0.05,
                ..options.simplex
            },
        );
        consider(&mut best, if refined.value <= first.value { refined } else { first });
    }

    let (x, value) = best.ok_or_else(|| {
        CtsError::OptimizerDiverged("non-finite likelihood at every start".into())
    })?;
    let params = standardize(x[0], x[1].exp(), x[2].exp())?;
    let dist = CtsDistribution::with_options(params.to_cts(), &options.grid)?;
    let ks = ks_distance(samples, |v| dist.cdf(v))
        .map_err(|e| CtsError::OptimizerDiverged(e.to_string()))?;
    Ok(CtsFit {
        params,
        log_likelihood: -value * samples.len() as f64,
        ks,
    })
}
