//! Classical tempered stable (CTS) distribution.
//!
//! `X ~ CTS(α, C₊, C₋, λ₊, λ₋, m)` is the infinitely divisible law with Lévy
//! density `C₊ e^{-λ₊x} x^{-1-α}` on `x > 0` and `C₋ e^{-λ₋|x|} |x|^{-1-α}` on
//! `x < 0`, centred so that `E[X] = m`. Its characteristic function is
//!
//! ```text
//! log φ(u) = ium − iuΓ(1−α)(C₊λ₊^{α−1} − C₋λ₋^{α−1})
//!          + Γ(−α)[C₊((λ₊−iu)^α − λ₊^α) + C₋((λ₋+iu)^α − λ₋^α)]
//! ```
//!
//! Densities, distribution functions and tail measures are obtained by FFT
//! inversion of `φ` on a [`DensityGrid`]; see [`grid`].

mod fit;
mod grid;

pub use fit::{fit_mle, CtsFit, FitOptions};
pub use grid::{cvar, density_grid, quantile, sample, var, CtsDistribution, DensityGrid, GridOptions};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

/// Largest admissible tail index.
pub const ALPHA_MAX: f64 = 2.0;

/// Half-width of the band around `α = 1` where `Γ(−α)` and `Γ(1−α)` are
/// replaced by a linear interpolation between `1 ± ALPHA_ONE_BAND`.
const ALPHA_ONE_BAND: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtsError {
    #[error("invalid CTS parameters: {0}")]
    InvalidParams(String),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("density grid too narrow: estimated truncated mass {0:.3e}")]
    GridTooNarrow(f64),
    #[error("invalid grid specification: {0}")]
    InvalidGrid(String),
    #[error("too few samples for a CTS fit: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("CTS likelihood optimisation diverged: {0}")]
    OptimizerDiverged(String),
}

/// Parameters of a CTS law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtsParams {
    /// Tail index in `(0, 2)`.
    pub alpha: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    /// Decay rate of the upper tail.
    pub lambda_plus: f64,
    /// Decay rate of the lower tail.
    pub lambda_minus: f64,
    /// Location; equals the mean.
    pub m: f64,
}

impl CtsParams {
    pub fn new(
        alpha: f64,
        c_plus: f64,
        c_minus: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        m: f64,
    ) -> Result<Self, CtsError> {
        let params = Self {
            alpha,
            c_plus,
            c_minus,
            lambda_plus,
            lambda_minus,
            m,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), CtsError> {
        if !(self.alpha > 0.0 && self.alpha < ALPHA_MAX) {
            return Err(CtsError::InvalidParams(format!(
                "alpha = {} not in (0, 2)",
                self.alpha
            )));
        }
        for (name, v) in [
            ("c_plus", self.c_plus),
            ("c_minus", self.c_minus),
            ("lambda_plus", self.lambda_plus),
            ("lambda_minus", self.lambda_minus),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CtsError::InvalidParams(format!("{name} = {v} must be > 0")));
            }
        }
        if !self.m.is_finite() {
            return Err(CtsError::InvalidParams(format!("m = {} not finite", self.m)));
        }
        Ok(())
    }

    /// Law of `−X`: the two tails swap roles and the location flips sign.
    pub fn reflect(&self) -> Self {
        Self {
            alpha: self.alpha,
            c_plus: self.c_minus,
            c_minus: self.c_plus,
            lambda_plus: self.lambda_minus,
            lambda_minus: self.lambda_plus,
            m: -self.m,
        }
    }

    /// Law of `scale·X + shift` for `scale > 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        let s_alpha = scale.powf(self.alpha);
        Self {
            alpha: self.alpha,
            c_plus: self.c_plus * s_alpha,
            c_minus: self.c_minus * s_alpha,
            lambda_plus: self.lambda_plus / scale,
            lambda_minus: self.lambda_minus / scale,
            m: scale * self.m + shift,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.c_plus == self.c_minus && self.lambda_plus == self.lambda_minus && self.m == 0.0
    }

    pub fn stdev(&self) -> f64 {
        cumulant(self, 2).sqrt()
    }
}

/// Shape of a standardised CTS law (zero mean, unit variance).
///
/// The scale `C = C₊ = C₋` and location `m = 0` are implied by the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "StdCtsRecord", try_from = "StdCtsRecord")]
pub struct StdCtsParams {
    alpha: f64,
    lambda_plus: f64,
    lambda_minus: f64,
}

#[derive(Serialize, Deserialize)]
struct StdCtsRecord {
    alpha: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    #[serde(default)]
    c: Option<f64>,
    #[serde(default)]
    m: Option<f64>,
}

impl From<StdCtsParams> for StdCtsRecord {
    fn from(p: StdCtsParams) -> Self {
        Self {
            alpha: p.alpha,
            lambda_plus: p.lambda_plus,
            lambda_minus: p.lambda_minus,
            c: Some(p.scale()),
            m: Some(0.0),
        }
    }
}

impl TryFrom<StdCtsRecord> for StdCtsParams {
    type Error = CtsError;

    fn try_from(r: StdCtsRecord) -> Result<Self, Self::Error> {
        standardize(r.alpha, r.lambda_plus, r.lambda_minus)
    }
}

impl StdCtsParams {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }

    /// Common scale `C₊ = C₋` giving unit variance.
    pub fn scale(&self) -> f64 {
        let (a, lp, lm) = (self.alpha, self.lambda_plus, self.lambda_minus);
        1.0 / (gamma_pos(2.0 - a) * (lp.powf(a - 2.0) + lm.powf(a - 2.0)))
    }

    pub fn to_cts(&self) -> CtsParams {
        let c = self.scale();
        CtsParams {
            alpha: self.alpha,
            c_plus: c,
            c_minus: c,
            lambda_plus: self.lambda_plus,
            lambda_minus: self.lambda_minus,
            m: 0.0,
        }
    }

    /// Standardised law of `−ε`.
    pub fn reflect(&self) -> Self {
        Self {
            alpha: self.alpha,
            lambda_plus: self.lambda_minus,
            lambda_minus: self.lambda_plus,
        }
    }
}

impl From<StdCtsParams> for CtsParams {
    fn from(p: StdCtsParams) -> Self {
        p.to_cts()
    }
}

/// Standardised CTS shape with `C₊ = C₋ = C` and `m = 0` chosen so the law has
/// mean 0 and variance 1.
pub fn standardize(
    alpha: f64,
    lambda_plus: f64,
    lambda_minus: f64,
) -> Result<StdCtsParams, CtsError> {
    let p = StdCtsParams {
        alpha,
        lambda_plus,
        lambda_minus,
    };
    // validation through the induced full parameter set
    CtsParams {
        alpha,
        c_plus: 1.0,
        c_minus: 1.0,
        lambda_plus,
        lambda_minus,
        m: 0.0,
    }
    .validate()?;
    Ok(p)
}

fn gamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    ln_gamma(x).exp()
}

/// Characteristic function `φ(u)` at a real frequency.
pub fn char_fn(params: &CtsParams, u: f64) -> Complex64 {
    log_char_fn(params, Complex64::new(u, 0.0)).exp()
}

/// `log φ(z)`, valid for complex `z` in the strip `−λ₊ < Im z < λ₋`.
pub fn log_char_fn(params: &CtsParams, z: Complex64) -> Complex64 {
    let a = params.alpha;
    if (a - 1.0).abs() < ALPHA_ONE_BAND {
        let lo = log_char_fn_raw(params, 1.0 - ALPHA_ONE_BAND, z);
        let hi = log_char_fn_raw(params, 1.0 + ALPHA_ONE_BAND, z);
        let w = (a - (1.0 - ALPHA_ONE_BAND)) / (2.0 * ALPHA_ONE_BAND);
        return lo + (hi - lo) * w;
    }
    log_char_fn_raw(params, a, z)
}

/// Uses `Γ(−α) = Γ(2−α)/(α(α−1))` and `Γ(1−α) = −αΓ(−α)` so that only
/// positive gamma arguments are evaluated.
fn log_char_fn_raw(params: &CtsParams, a: f64, z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let iz = i * z;
    let k = gamma_pos(2.0 - a) / (a * (a - 1.0));
    let side = |c: f64, lambda: f64, w: Complex64| -> Complex64 {
        // (λ − w)^α − λ^α + αwλ^{α−1}
        let shifted = Complex64::new(lambda, 0.0) - w;
        c * (shifted.powf(a) - lambda.powf(a) + w * (a * lambda.powf(a - 1.0)))
    };
    iz * params.m
        + k * (side(params.c_plus, params.lambda_plus, iz)
            + side(params.c_minus, params.lambda_minus, -iz))
}

/// `k`-th cumulant, `k ≥ 1`: `κ₁ = m`,
/// `κ_k = Γ(k−α)(C₊λ₊^{α−k} + (−1)^k C₋λ₋^{α−k})` for `k ≥ 2`.
pub fn cumulant(params: &CtsParams, k: u32) -> f64 {
    if k == 1 {
        return params.m;
    }
    let a = params.alpha;
    let kf = f64::from(k);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    gamma_pos(kf - a)
        * (params.c_plus * params.lambda_plus.powf(a - kf)
            + sign * params.c_minus * params.lambda_minus.powf(a - kf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(params: &CtsParams) -> Moments {
    let k2 = cumulant(params, 2);
    Moments {
        mean: params.m,
        variance: k2,
        skewness: cumulant(params, 3) / k2.powf(1.5),
        excess_kurtosis: cumulant(params, 4) / (k2 * k2),
    }
}
