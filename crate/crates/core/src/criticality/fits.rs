//! Least-squares scaling fits on logarithmic axes.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `y = A x^p`
    PowerLaw,
    /// `y = A e^{−b x}`
    Exponential,
    /// `y = A x^c e^{−b x}`
    ExpWithPowerCorrection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub kind: FitKind,
    pub amplitude: f64,
    /// Power-law exponent `p`, or decay rate `b` of the exponential kinds.
    pub exponent: f64,
    /// Power-law correction `c` of [`FitKind::ExpWithPowerCorrection`].
    pub correction: Option<f64>,
    /// Root-mean-square residual of `ln y`.
    pub residual: f64,
    /// Range of `x` covered by the fitted points.
    pub window: (f64, f64),
    pub points: usize,
}

impl ScalingFit {
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            FitKind::PowerLaw => self.amplitude * x.powf(self.exponent),
            FitKind::Exponential => self.amplitude * (-self.exponent * x).exp(),
            FitKind::ExpWithPowerCorrection => {
                self.amplitude * x.powf(self.correction.unwrap_or(0.0)) * (-self.exponent * x).exp()
            }
        }
    }
}

fn check_xy(x: &[f64], y: &[f64], min_points: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(SbmError::LengthMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < min_points {
        return Err(SbmError::Config(format!("fit needs at least {min_points} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(SbmError::Domain("fit data must be finite".into()));
    }
    if y.iter().any(|&v| !(v > 0.0)) {
        return Err(SbmError::Domain("fit values must be positive".into()));
    }
    Ok(())
}

/// Linear least squares; returns coefficients and the RMS residual.
fn linear_fit(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let p = rows[0].len();
    let a = nalgebra::DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| SbmError::Domain(format!("least squares failed: {e}")))?;
    let res = &a * &coef - &b;
    Ok((coef.iter().copied().collect(), (res.norm_squared() / rows.len() as f64).sqrt()))
}

fn window(x: &[f64]) -> (f64, f64) {
    (x.iter().copied().fold(f64::INFINITY, f64::min), x.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `y = A x^p` from a straight line on log-log axes.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    check_xy(x, y, 2)?;
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(SbmError::Domain("power-law abscissae must be positive".into()));
    }
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v.ln()]).collect();
    let rhs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (c, residual) = linear_fit(&rows, &rhs)?;
    Ok(ScalingFit {
        kind: FitKind::PowerLaw,
        amplitude: c[0].exp(),
        exponent: c[1],
        correction: None,
        residual,
        window: window(x),
        points: x.len(),
    })
}

/// `y = A e^{−b x}` from a straight line on linear-log axes.
pub fn fit_exponential(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    check_xy(x, y, 2)?;
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, -v]).collect();
    let rhs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (c, residual) = linear_fit(&rows, &rhs)?;
    Ok(ScalingFit {
        kind: FitKind::Exponential,
        amplitude: c[0].exp(),
        exponent: c[1],
        correction: None,
        residual,
        window: window(x),
        points: x.len(),
    })
}

/// `y = A x^c e^{−b x}`, linear in `(ln A, b, c)` on log axes.
pub fn fit_exp_power_correction(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    check_xy(x, y, 3)?;
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(SbmError::Domain("abscissae must be positive for the power correction".into()));
    }
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, -v, v.ln()]).collect();
    let rhs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (c, residual) = linear_fit(&rows, &rhs)?;
    Ok(ScalingFit {
        kind: FitKind::ExpWithPowerCorrection,
        amplitude: c[0].exp(),
        exponent: c[1],
        correction: Some(c[2]),
        residual,
        window: window(x),
        points: x.len(),
    })
}

pub fn fit(kind: FitKind, x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    match kind {
        FitKind::PowerLaw => fit_power_law(x, y),
        FitKind::Exponential => fit_exponential(x, y),
        FitKind::ExpWithPowerCorrection => fit_exp_power_correction(x, y),
    }
}

// ---------------------------------------------------------------------------
// shift of the critical coupling

/// Abscissa of a series of critical couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftSeries {
    /// `x = ln Λ` at fixed `ω_min`: the shift scales as `(ln Λ)^{d − 1/ν}`.
    LnLambda,
    /// `x = ω_min` at fixed `Λ`: the shift scales as `ω_min^{1/ν}`.
    OmegaMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftScaling {
    pub series: ShiftSeries,
    pub fit: ScalingFit,
    pub d_eff: f64,
    pub inverse_nu: f64,
    /// `d − 1/ν`, reported for [`ShiftSeries::LnLambda`].
    pub d_minus_inverse_nu: Option<f64>,
}

/// Power-law fit of `Δα_c(x)` and the correlation-length exponent it implies.
pub fn fit_shift_scaling(x: &[f64], shift: &[f64], series: ShiftSeries, d_eff: f64) -> Result<ShiftScaling> {
    let fit = fit_power_law(x, shift)?;
    let (inverse_nu, d_minus_inverse_nu) = match series {
        ShiftSeries::LnLambda => (d_eff - fit.exponent, Some(fit.exponent)),
        ShiftSeries::OmegaMin => (fit.exponent, None),
    };
    Ok(ShiftScaling { series, fit, d_eff, inverse_nu, d_minus_inverse_nu })
}

/// `α_c(x) = α_∞ + A x^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub alpha_limit: f64,
    pub amplitude: f64,
    pub exponent: f64,
    /// Root-mean-square residual of `α_c`.
    pub residual: f64,
    pub window: (f64, f64),
}

impl Extrapolation {
    pub fn eval(&self, x: f64) -> f64 {
        self.alpha_limit + self.amplitude * x.powf(self.exponent)
    }
}

/// Fits `α_c(x) = α_∞ + A x^p` with `p` scanned over `[p_min, p_max]` and the
/// linear coefficients solved exactly at every `p`; returns the limit `x → 0`.
pub fn extrapolate_critical(x: &[f64], alpha_c: &[f64], p_range: (f64, f64)) -> Result<Extrapolation> {
    if x.len() != alpha_c.len() {
        return Err(SbmError::LengthMismatch { expected: x.len(), got: alpha_c.len() });
    }
    if x.len() < 3 {
        return Err(SbmError::Config(format!("extrapolation needs at least 3 points, got {}", x.len())));
    }
    if x.iter().any(|&v| !(v > 0.0)) || alpha_c.iter().any(|v| !v.is_finite()) {
        return Err(SbmError::Domain("extrapolation needs positive abscissae and finite couplings".into()));
    }
    let (p_min, p_max) = p_range;
    if !(p_min > 0.0 && p_max > p_min) {
        return Err(SbmError::Config(format!("invalid exponent range ({p_min}, {p_max})")));
    }
    let solve = |p: f64| -> Result<(Vec<f64>, f64)> {
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v.powf(p)]).collect();
        linear_fit(&rows, alpha_c)
    };
    let steps = 2000;
    let (lp0, lp1) = (p_min.ln(), p_max.ln());
    let at = |s: f64| (lp0 + (lp1 - lp0) * s).exp();
    let mut best = (0.0, f64::INFINITY);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let r = solve(at(t))?.1;
        if r < best.1 {
            best = (t, r);
        }
    }
    let h = 1.0 / steps as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(0.0), (best.0 + h).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if solve(at(m1))?.1 < solve(at(m2))?.1 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let p = at(0.5 * (lo + hi));
    let (c, residual) = solve(p)?;
    Ok(Extrapolation { alpha_limit: c[0], amplitude: c[1], exponent: p, residual, window: window(x) })
}

// ---------------------------------------------------------------------------
// derivative tail

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFitOptions {
    /// Largest-α points averaged into the asymptote (ignored if `asymptote` is set).
    pub plateau_points: usize,
    pub asymptote: Option<f64>,
    /// Couplings included in the fit; defaults to everything left of the plateau.
    pub window: Option<(f64, f64)>,
}

impl Default for TailFitOptions {
    fn default() -> Self {
        Self { plateau_points: 3, asymptote: None, window: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub asymptote: f64,
    /// Exponential fit of `|∂E_g/∂α − asymptote|`.
    pub fit: ScalingFit,
}

/// Exponential fit of the approach of `∂E_g/∂α` to its large-α plateau.
pub fn derivative_tail_fit(alphas: &[f64], derivative: &[f64], opts: &TailFitOptions) -> Result<TailFit> {
    if alphas.len() != derivative.len() {
        return Err(SbmError::LengthMismatch { expected: alphas.len(), got: derivative.len() });
    }
    let n = alphas.len();
    let (asymptote, fit_end) = match opts.asymptote {
        Some(a) => (a, n),
        None => {
            let k = opts.plateau_points.max(1);
            if n < k + 2 {
                return Err(SbmError::Config(format!("tail fit needs at least {} points", k + 2)));
            }
            (derivative[n - k..].iter().sum::<f64>() / k as f64, n - k)
        }
    };
    let (lo, hi) = opts.window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let (x, y): (Vec<f64>, Vec<f64>) = (0..fit_end)
        .filter(|&i| alphas[i] >= lo && alphas[i] <= hi)
        .map(|i| (alphas[i], (derivative[i] - asymptote).abs()))
        .filter(|(_, d)| *d > 0.0)
        .unzip();
    let fit = fit_exponential(&x, &y)?;
    Ok(TailFit { asymptote, fit })
}
