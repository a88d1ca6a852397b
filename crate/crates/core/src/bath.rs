//! Logarithmically discretized bosonic bath with a power-law spectral density
//! `J(ω) = 2α ω_c^{1-s} ω^s`.
//!
//! Bin `k` (0-based, ascending in frequency) covers
//! `[Λ^{k-M} ω_c, Λ^{k+1-M} ω_c]`. The coupling of the representative mode is the
//! integrated weight of the bin and its frequency is the `J`-weighted centroid,
//! both obtained from the power-law antiderivatives.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbmError};

/// Parameters of the spectral density and of its logarithmic discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Spectral exponent.
    pub s: f64,
    /// Dimensionless coupling strength.
    pub alpha: f64,
    pub omega_c: f64,
    /// Discretization factor, strictly greater than one.
    pub lambda: f64,
    /// Number of modes.
    pub m: usize,
}

impl BathSpec {
    pub fn new(s: f64, alpha: f64, omega_c: f64, lambda: f64, m: usize) -> Result<Self> {
        let spec = Self { s, alpha, omega_c, lambda, m };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec from a target lowest frequency. `M` is rounded to the nearest
    /// integer; a warning is logged when the achieved `ω_min` misses the target by
    /// more than 1%.
    pub fn from_omega_min(s: f64, alpha: f64, omega_c: f64, lambda: f64, omega_min: f64) -> Result<Self> {
        if !(lambda > 1.0) {
            return Err(SbmError::Config(format!("discretization factor must exceed 1, got {lambda}")));
        }
        if !(omega_min > 0.0 && omega_min < omega_c) {
            return Err(SbmError::Config(format!(
                "omega_min must lie in (0, omega_c), got {omega_min}"
            )));
        }
        let exact = (omega_c / omega_min).ln() / lambda.ln();
        let m = exact.round().max(1.0) as usize;
        let spec = Self::new(s, alpha, omega_c, lambda, m)?;
        let achieved = spec.omega_min();
        let rel = (achieved - omega_min).abs() / omega_min;
        if rel > 0.01 {
            log::warn!(
                "omega_min {omega_min:e} not reachable with Lambda={lambda}: using M={m}, omega_min={achieved:e} (rel. diff {rel:.3})"
            );
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0) || !self.lambda.is_finite() {
            return Err(SbmError::Config(format!("discretization factor must exceed 1, got {}", self.lambda)));
        }
        if self.m < 1 {
            return Err(SbmError::Config("number of modes must be at least 1".into()));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(SbmError::Config(format!("spectral exponent must be positive, got {}", self.s)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(SbmError::Config(format!("coupling must be non-negative, got {}", self.alpha)));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(SbmError::Config(format!("cutoff must be positive, got {}", self.omega_c)));
        }
        if self.s > 1.0 {
            log::warn!("s = {} > 1: super-Ohmic bath, no localization transition expected", self.s);
        }
        Ok(())
    }

    /// `ω_min = Λ^{-M} ω_c`.
    pub fn omega_min(&self) -> f64 {
        self.omega_c * (-(self.m as f64) * self.lambda.ln()).exp()
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }
}

/// `J(ω) = 2α ω_c^{1-s} ω^s`.
pub fn spectral_density(omega: f64, spec: &BathSpec) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(SbmError::Domain(format!("spectral density needs omega >= 0, got {omega}")));
    }
    if omega == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * spec.alpha * spec.omega_c.powf(1.0 - spec.s) * omega.powf(spec.s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub lambda: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub spec: BathSpec,
    /// Ascending in frequency.
    pub modes: Vec<Mode>,
}

impl DiscretizedBath {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    /// Edges `[Λ^{k-M} ω_c, Λ^{k+1-M} ω_c]` of bin `k`.
    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        bin_edges(&self.spec, k)
    }

    /// Builds a bath directly from a mode table (used by tests and toy models).
    pub fn from_modes(spec: BathSpec, modes: Vec<Mode>) -> Self {
        Self { spec, modes }
    }

    /// Total reorganization weight `Σ λ_k² / (4 ω_k)`, the classical
    /// displaced-oscillator energy gain of a single fully polarized spin.
    pub fn reorganization_energy(&self) -> f64 {
        self.modes.iter().map(|m| m.lambda * m.lambda / (4.0 * m.omega)).sum()
    }

    /// CSV table with header `k,omega_k,lambda_k` (`k` is 1-based).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,omega_k,lambda_k\n");
        for (k, m) in self.modes.iter().enumerate() {
            let _ = writeln!(out, "{},{:.17e},{:.17e}", k + 1, m.omega, m.lambda);
        }
        out
    }
}

fn bin_edges(spec: &BathSpec, k: usize) -> (f64, f64) {
    let ln_l = spec.lambda.ln();
    let lo = spec.omega_c * ((k as f64 - spec.m as f64) * ln_l).exp();
    let hi = spec.omega_c * ((k as f64 + 1.0 - spec.m as f64) * ln_l).exp();
    (lo, hi)
}

/// `(aΛ)^q - a^q`, evaluated as `a^q · expm1(q ln Λ)` so that narrow bins
/// (Λ → 1) do not lose precision.
fn power_difference(a: f64, ln_lambda: f64, q: f64) -> f64 {
    a.powf(q) * (q * ln_lambda).exp_m1()
}

pub fn discretize(spec: &BathSpec) -> Result<DiscretizedBath> {
    spec.validate()?;
    let s = spec.s;
    let ln_l = spec.lambda.ln();
    let prefactor = 2.0 * spec.alpha * spec.omega_c.powf(1.0 - s);
    let modes = (0..spec.m)
        .map(|k| {
            let (lo, _) = bin_edges(spec, k);
            let d1 = power_difference(lo, ln_l, s + 1.0);
            let d2 = power_difference(lo, ln_l, s + 2.0);
            let lambda_sq = prefactor * d1 / (s + 1.0);
            // α cancels between numerator and denominator, so this also defines
            // the zero-coupling limit.
            let omega = (s + 1.0) / (s + 2.0) * d2 / d1;
            Mode { lambda: lambda_sq.sqrt(), omega }
        })
        .collect();
    Ok(DiscretizedBath { spec: *spec, modes })
}
