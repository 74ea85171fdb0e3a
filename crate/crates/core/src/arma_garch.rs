//! ARMA(1,1)-GARCH(1,1) with standardised CTS innovations.
//!
//! ```text
//! y_t   = c + a·y_{t−1} + b·σ_{t−1}ε_{t−1} + σ_t ε_t
//! σ_t²  = ω + α₁(σ_{t−1}ε_{t−1})² + β₁σ_{t−1}²
//! ```
//!
//! Estimation is two-stage: a Student-t quasi-likelihood for the recursion,
//! then a CTS maximum-likelihood fit of the standardised residuals. Forecasts
//! transport the innovation risk measures through the one-step mean and
//! volatility: `CVaR(y_{t+1}) = −μ_{t+1} + σ_{t+1}·CVaR(ε)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::cts::{fit_mle, CtsDistribution, CtsError, FitOptions, StdCtsParams};
use crate::optimize::{bfgs, BfgsOptions};
use crate::stats::{is_constant, mean, variance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArmaGarchError {
    #[error("too few observations: got {got}, need {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("no stationary fit found after all restarts")]
    NonStationaryFit,
    #[error(transparent)]
    Cts(#[from] CtsError),
}

/// Bounds on the stage-1 Student-t degrees of freedom, `(lower, upper]`.
pub const NU_BOUNDS: (f64, f64) = (2.1, 100.0);
/// Largest admissible `α₁ + β₁`.
const MAX_PERSISTENCE: f64 = 0.9999;
/// 95% point of χ²₂: the ARMA terms are kept only when they improve the
/// log-likelihood by more than half of this.
const ARMA_LR_CRITICAL: f64 = 5.991;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmaGarchParams {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub nu: f64,
}

impl ArmaGarchParams {
    pub fn is_valid(&self) -> bool {
        self.a.abs() < 1.0
            && self.omega > 0.0
            && self.alpha1 >= 0.0
            && self.beta1 >= 0.0
            && self.alpha1 + self.beta1 < 1.0
            && self.nu > 2.0
            && [self.c, self.b].iter().all(|v| v.is_finite())
    }

    /// Rescales the model to the series `s·y` (`s > 0`).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            c: self.c * s,
            omega: self.omega * s * s,
            ..*self
        }
    }
}

/// Filter values at the last observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub y_t: f64,
    pub eps_t: f64,
    pub sigma_t: f64,
    pub sigma_next: f64,
}

/// Law of the unit-variance innovation `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Innovations {
    Cts(StdCtsParams),
    /// Standardised Student-t; used when the CTS refit fails.
    StudentT { nu: f64 },
}

impl Innovations {
    pub fn is_cts(&self) -> bool {
        matches!(self, Innovations::Cts(_))
    }

    /// Law of `−ε`.
    pub fn reflect(&self) -> Self {
        match self {
            Innovations::Cts(p) => Innovations::Cts(p.reflect()),
            t => *t,
        }
    }

    pub fn risk(&self) -> Result<InnovationRisk, CtsError> {
        Ok(match self {
            Innovations::Cts(p) => InnovationRisk::Cts(Box::new(CtsDistribution::new(p.to_cts())?)),
            Innovations::StudentT { nu } => InnovationRisk::StudentT { nu: *nu },
        })
    }
}

/// Evaluated innovation law, reusable across several confidence levels.
#[derive(Debug, Clone)]
pub enum InnovationRisk {
    Cts(Box<CtsDistribution>),
    StudentT { nu: f64 },
}

impl InnovationRisk {
    pub fn var(&self, confidence: f64) -> Result<f64, CtsError> {
        match self {
            InnovationRisk::Cts(d) => d.var(confidence),
            InnovationRisk::StudentT { nu } => {
                let eta = check_level(confidence)?;
                if eta == 1.0 {
                    return Err(CtsError::ProbabilityOutOfRange(eta));
                }
                Ok(-t_standard(*nu).inverse_cdf(eta) * t_scale(*nu))
            }
        }
    }

    pub fn cvar(&self, confidence: f64) -> Result<f64, CtsError> {
        match self {
            InnovationRisk::Cts(d) => d.cvar(confidence),
            InnovationRisk::StudentT { nu } => {
                let eta = check_level(confidence)?;
                if eta == 1.0 {
                    return Ok(0.0);
                }
                // E[T | T < t_η] = −(ν + t²)/(ν − 1) · f(t)/η
                let t = t_standard(*nu).inverse_cdf(eta);
                let density = t_log_density(t, *nu).exp();
                Ok((nu + t * t) / (nu - 1.0) * density / eta * t_scale(*nu))
            }
        }
    }
}

fn check_level(confidence: f64) -> Result<f64, CtsError> {
    let eta = 1.0 - confidence;
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(CtsError::ProbabilityOutOfRange(eta))
    }
}

fn t_standard(nu: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, nu).expect("nu > 2")
}

/// Standard deviation of a unit-scale Student-t is `1/t_scale`.
fn t_scale(nu: f64) -> f64 {
    ((nu - 2.0) / nu).sqrt()
}

fn t_log_density(t: f64, nu: f64) -> f64 {
    ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - (nu + 1.0) / 2.0 * (1.0 + t * t / nu).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaGarchFit {
    pub params: ArmaGarchParams,
    pub innovations: Innovations,
    pub state: FilterState,
    /// Standardised residuals, one per observation; the first is the
    /// presample value `ε₀ = 0`.
    pub residuals: Vec<f64>,
    /// Stage-1 Student-t log-likelihood.
    pub loglik_t: f64,
    /// CTS log-likelihood of the residuals, when the refit succeeded.
    pub loglik_cts: Option<f64>,
    /// KS distance of the CTS refit, when it succeeded.
    pub ks: Option<f64>,
    /// Why the CTS refit failed, if it did.
    pub fallback_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaGarchOptions {
    pub min_observations: usize,
    pub quasi_newton: BfgsOptions,
    pub cts: FitOptions,
}

impl Default for ArmaGarchOptions {
    fn default() -> Self {
        Self {
            min_observations: crate::MIN_OBSERVATIONS,
            quasi_newton: BfgsOptions {
                max_iterations: 300,
                gradient_tolerance: 1e-6,
                value_tolerance: 1e-12,
                difference_step: 1e-5,
            },
            cts: FitOptions::default(),
        }
    }
}

/// Output of the recursion on a given series.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub residuals: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub state: FilterState,
}

/// Runs the recursion with `σ₀² = sample variance`, `ε₀ = 0`; the first
/// observation is presample.
pub fn filter(params: &ArmaGarchParams, returns: &[f64]) -> Filtered {
    let n = returns.len();
    assert!(n >= 2, "filter needs at least two observations");
    let mut residuals = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    let mut sigma = variance(returns).sqrt();
    let mut eps = 0.0;
    residuals.push(eps);
    sigmas.push(sigma);
    for t in 1..n {
        let shock = sigma * eps;
        let var_t = params.omega + params.alpha1 * shock * shock + params.beta1 * sigma * sigma;
        let mu = params.c + params.a * returns[t - 1] + params.b * shock;
        sigma = var_t.sqrt();
        eps = (returns[t] - mu) / sigma;
        residuals.push(eps);
        sigmas.push(sigma);
    }
    let shock = sigma * eps;
    let sigma_next =
        (params.omega + params.alpha1 * shock * shock + params.beta1 * sigma * sigma).sqrt();
    Filtered {
        residuals,
        sigmas,
        state: FilterState {
            y_t: returns[n - 1],
            eps_t: eps,
            sigma_t: sigma,
            sigma_next,
        },
    }
}

/// Generates `innovations.len()` returns driven by the given unit-variance
/// innovations, started at the unconditional mean and variance.
pub fn simulate(params: &ArmaGarchParams, innovations: &[f64]) -> Vec<f64> {
    let p = params;
    let mut y_prev = p.c / (1.0 - p.a);
    let mut sigma_prev = (p.omega / (1.0 - p.alpha1 - p.beta1)).sqrt();
    let mut shock_prev = 0.0;
    innovations
        .iter()
        .map(|&e| {
            let sigma = (p.omega + p.alpha1 * shock_prev * shock_prev + p.beta1 * sigma_prev * sigma_prev).sqrt();
            let y = p.c + p.a * y_prev + p.b * shock_prev + sigma * e;
            y_prev = y;
            sigma_prev = sigma;
            shock_prev = sigma * e;
            y
        })
        .collect()
}

/// Student-t log-likelihood of observations `1..n` (the first is presample).
fn student_loglik(params: &ArmaGarchParams, returns: &[f64]) -> f64 {
    let nu = params.nu;
    let constant = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * ((nu - 2.0) * std::f64::consts::PI).ln();
    let mut sigma = variance(returns).sqrt();
    let mut eps = 0.0;
    let mut total = 0.0;
    for t in 1..returns.len() {
        let shock = sigma * eps;
        let var_t = params.omega + params.alpha1 * shock * shock + params.beta1 * sigma * sigma;
        let mu = params.c + params.a * returns[t - 1] + params.b * shock;
        sigma = var_t.sqrt();
        eps = (returns[t] - mu) / sigma;
        total += constant - sigma.ln() - (nu + 1.0) / 2.0 * (eps * eps / (nu - 2.0)).ln_1p();
    }
    total
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates → parameters for a series with unit variance.
fn decode(theta: &[f64]) -> ArmaGarchParams {
    let persistence = MAX_PERSISTENCE * logistic(theta[4]);
    let share = logistic(theta[5]);
    ArmaGarchParams {
        c: theta[0],
        a: theta[1].tanh(),
        b: theta[2].tanh(),
        omega: theta[3].exp(),
        alpha1: persistence * share,
        beta1: persistence * (1.0 - share),
        nu: NU_BOUNDS.0 + (NU_BOUNDS.1 - NU_BOUNDS.0) * logistic(theta[6]),
    }
}

fn encode(p: &ArmaGarchParams) -> Vec<f64> {
    let persistence = p.alpha1 + p.beta1;
    vec![
        p.c,
        p.a.atanh(),
        p.b.atanh(),
        p.omega.ln(),
        logit(persistence / MAX_PERSISTENCE),
        logit(p.alpha1 / persistence),
        logit((p.nu - NU_BOUNDS.0) / (NU_BOUNDS.1 - NU_BOUNDS.0)),
    ]
}

/// Starting points on the unit-variance scale: a persistent, a moderate and a
/// weakly persistent volatility regime.
fn starts(mean: f64) -> [ArmaGarchParams; 3] {
    let start = |a: f64, alpha1: f64, beta1: f64, nu: f64| ArmaGarchParams {
        c: mean * (1.0 - a),
        a,
        b: 0.0,
        omega: 1.0 - alpha1 - beta1,
        alpha1,
        beta1,
        nu,
    };
    [
        start(0.0, 0.08, 0.88, 8.0),
        start(0.05, 0.15, 0.6, 5.0),
        start(-0.05, 0.05, 0.3, 20.0),
    ]
}

fn keep_better(best: &mut Option<(ArmaGarchParams, f64)>, p: ArmaGarchParams, value: f64) {
    if value.is_finite() && p.is_valid() && best.is_none_or(|(_, v)| value < v) {
        *best = Some((p, value));
    }
}

/// Drops the ARMA coordinates.
fn narrow(theta: &[f64]) -> Vec<f64> {
    [&theta[..1], &theta[3..]].concat()
}

/// Reinserts `a = b = 0`.
fn widen(theta: &[f64]) -> Vec<f64> {
    [&theta[..1], &[0.0, 0.0], &theta[1..]].concat()
}

/// Two-stage fit.
pub fn fit(returns: &[f64], options: &ArmaGarchOptions) -> Result<ArmaGarchFit, ArmaGarchError> {
    let need = options.min_observations.max(3);
    if returns.len() < need {
        return Err(ArmaGarchError::TooFewSamples {
            got: returns.len(),
            need,
        });
    }
    if returns.iter().any(|v| !v.is_finite()) {
        return Err(ArmaGarchError::DegenerateSeries("non-finite observation".into()));
    }
    let var = variance(returns);
    if is_constant(returns) || !(var > 0.0) {
        return Err(ArmaGarchError::DegenerateSeries("zero sample variance".into()));
    }

    // fit on the unit-variance series and scale back
    let scale = var.sqrt();
    let unit: Vec<f64> = returns.iter().map(|v| v / scale).collect();
    let full = |theta: &[f64]| -student_loglik(&decode(theta), &unit);
    // a = b = 0: the ARMA terms are unidentified on white noise (any a = −b
    // gives the same likelihood), so the constant-mean model is fitted too
    let restricted = |theta: &[f64]| -student_loglik(&decode(&widen(theta)), &unit);
    let mut best_full: Option<(ArmaGarchParams, f64)> = None;
    let mut best_restricted: Option<(ArmaGarchParams, f64)> = None;
    for start in starts(mean(&unit)) {
        let theta = encode(&start);
        let m = bfgs(full, &theta, &options.quasi_newton);
        keep_better(&mut best_full, decode(&m.x), m.value);
        let m = bfgs(restricted, &narrow(&theta), &options.quasi_newton);
        keep_better(&mut best_restricted, decode(&widen(&m.x)), m.value);
    }
    let best = match (best_full, best_restricted) {
        (Some(f), Some(r)) if 2.0 * (r.1 - f.1) < ARMA_LR_CRITICAL => Some(r),
        (Some(f), _) => Some(f),
        (None, r) => r,
    };
    let (unit_params, neg_loglik) = best.ok_or(ArmaGarchError::NonStationaryFit)?;
    let params = unit_params.scaled(scale);
    // likelihood of the original series differs by the Jacobian of the scaling
    let loglik_t = -neg_loglik - (returns.len() - 1) as f64 * scale.ln();

    let filtered = filter(&params, returns);
    let (innovations, loglik_cts, ks, fallback_reason) =
        match fit_mle(&filtered.residuals[1..], &options.cts) {
            Ok(f) => (Innovations::Cts(f.params), Some(f.log_likelihood), Some(f.ks), None),
            Err(e) => {
                log::warn!("CTS refit failed, using Student-t innovations: {e}");
                (Innovations::StudentT { nu: params.nu }, None, None, Some(e.to_string()))
            }
        };
    Ok(ArmaGarchFit {
        params,
        innovations,
        state: filtered.state,
        residuals: filtered.residuals,
        loglik_t,
        loglik_cts,
        ks,
        fallback_reason,
    })
}

impl ArmaGarchFit {
    /// `μ_{t+1} = c + a·y_t + b·σ_t·ε_t`.
    pub fn forecast_mean(&self) -> f64 {
        let p = &self.params;
        let s = &self.state;
        p.c + p.a * s.y_t + p.b * s.sigma_t * s.eps_t
    }

    pub fn forecast_sigma(&self) -> f64 {
        self.state.sigma_next
    }

    pub fn forecast_var(&self, confidence: f64) -> Result<f64, CtsError> {
        Ok(-self.forecast_mean() + self.forecast_sigma() * self.innovations.risk()?.var(confidence)?)
    }

    pub fn forecast_cvar(&self, confidence: f64) -> Result<f64, CtsError> {
        Ok(-self.forecast_mean() + self.forecast_sigma() * self.innovations.risk()?.cvar(confidence)?)
    }
}

/// One-step forecast risk, evaluating the innovation grid once.
#[derive(Debug, Clone)]
pub struct Forecast {
    pub mean: f64,
    pub sigma: f64,
    law: InnovationRisk,
    reflected: InnovationRisk,
}

impl Forecast {
    pub fn new(fit: &ArmaGarchFit) -> Result<Self, CtsError> {
        Ok(Self {
            mean: fit.forecast_mean(),
            sigma: fit.forecast_sigma(),
            law: fit.innovations.risk()?,
            reflected: fit.innovations.reflect().risk()?,
        })
    }

    /// Builds a forecast from explicit moments and innovation law.
    pub fn from_parts(mean: f64, sigma: f64, innovations: &Innovations) -> Result<Self, CtsError> {
        Ok(Self {
            mean,
            sigma,
            law: innovations.risk()?,
            reflected: innovations.reflect().risk()?,
        })
    }

    /// `VaR` of `y_{t+1} − shift`.
    pub fn var(&self, confidence: f64, shift: f64) -> Result<f64, CtsError> {
        Ok(-(self.mean - shift) + self.sigma * self.law.var(confidence)?)
    }

    /// `CVaR` of `y_{t+1} − shift`.
    pub fn cvar(&self, confidence: f64, shift: f64) -> Result<f64, CtsError> {
        Ok(-(self.mean - shift) + self.sigma * self.law.cvar(confidence)?)
    }

    /// `CVaR` of `shift − y_{t+1}`, through the reflected innovation law.
    pub fn cvar_reflected(&self, confidence: f64, shift: f64) -> Result<f64, CtsError> {
        Ok(-(shift - self.mean) + self.sigma * self.reflected.cvar(confidence)?)
    }
}
