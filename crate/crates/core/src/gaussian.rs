//! Entropic and entanglement measures of a two-mode Gaussian state whose
//! covariance matrix has the block form
//!
//! ```text
//!   ⎛ ΔX_k   0     CorX   0    ⎞
//!   ⎜ 0      ΔP_k  0      CorP ⎟
//!   ⎜ CorX   0     ΔX_l   0    ⎟
//!   ⎝ 0      CorP  0      ΔP_l ⎠
//! ```
//!
//! Vacuum variance is 1/2. Entropies, mutual information and discord are in
//! nats; the logarithmic negativity is in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbmError};

/// Arguments of [`entropy_f`] this far below 1/2 are clamped instead of rejected.
pub const ENTROPY_TOL: f64 = 1e-9;
/// Slack on `n_− ≥ 1/2` for the physicality flag.
pub const PHYSICAL_TOL: f64 = 1e-8;

/// `f(x) = (x + ½) ln(x + ½) − (x − ½) ln(x − ½)`, with `f(½) = 0`.
pub fn entropy_f(x: f64) -> Result<f64> {
    if !(x >= 0.5 - ENTROPY_TOL) {
        return Err(SbmError::Unphysical(format!("symplectic eigenvalue {x} below 1/2")));
    }
    let x = x.max(0.5);
    let lo = x - 0.5;
    let hi = x + 0.5;
    let tail = if lo > 0.0 { lo * lo.ln() } else { 0.0 };
    Ok(hi * hi.ln() - tail)
}

/// Two-mode covariance in block form. Determinants are computed once at
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCovariance {
    pub dx_k: f64,
    pub dp_k: f64,
    pub dx_l: f64,
    pub dp_l: f64,
    pub cor_x: f64,
    pub cor_p: f64,
    det_a: f64,
    det_b: f64,
    det_c: f64,
    det_sigma: f64,
}

/// Symplectic invariants of a [`TwoModeCovariance`] and of its partial transpose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplecticSpectrum {
    pub n_minus: f64,
    pub n_plus: f64,
    pub nu_tilde_minus: f64,
    pub nu_tilde_plus: f64,
    /// `det A + det B + 2 det C`.
    pub delta_sigma: f64,
    /// `det A + det B − 2 det C`.
    pub delta_tilde: f64,
}

/// Roots of `ν⁴ − Δν² + det σ = 0`, smaller one first. The smaller root is
/// taken from the product of roots to avoid cancellation.
fn symplectic_pair(delta: f64, det: f64) -> (f64, f64) {
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let big = 0.5 * (delta + disc);
    let small = if big > 0.0 { det / big } else { 0.0 };
    (small.max(0.0).sqrt(), big.max(0.0).sqrt())
}

impl TwoModeCovariance {
    pub fn new(dx_k: f64, dp_k: f64, dx_l: f64, dp_l: f64, cor_x: f64, cor_p: f64) -> Result<Self> {
        let all = [dx_k, dp_k, dx_l, dp_l, cor_x, cor_p];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(SbmError::Domain("non-finite covariance entry".into()));
        }
        if !(dx_k > 0.0 && dp_k > 0.0 && dx_l > 0.0 && dp_l > 0.0) {
            return Err(SbmError::Unphysical("variances must be positive".into()));
        }
        let det_a = dx_k * dp_k;
        let det_b = dx_l * dp_l;
        let det_c = cor_x * cor_p;
        let det_sigma = det_a * det_b + cor_x * cor_x * cor_p * cor_p
            - dx_k * dx_l * cor_p * cor_p
            - dp_k * dp_l * cor_x * cor_x;
        Ok(Self { dx_k, dp_k, dx_l, dp_l, cor_x, cor_p, det_a, det_b, det_c, det_sigma })
    }

    /// Product of two single-mode states.
    pub fn product(dx_k: f64, dp_k: f64, dx_l: f64, dp_l: f64) -> Result<Self> {
        Self::new(dx_k, dp_k, dx_l, dp_l, 0.0, 0.0)
    }

    pub fn det_a(&self) -> f64 {
        self.det_a
    }

    pub fn det_b(&self) -> f64 {
        self.det_b
    }

    pub fn det_c(&self) -> f64 {
        self.det_c
    }

    pub fn det_sigma(&self) -> f64 {
        self.det_sigma
    }

    /// Same state with the two modes exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.dx_l, self.dp_l, self.dx_k, self.dp_k, self.cor_x, self.cor_p).expect("entries already validated")
    }

    pub fn spectrum(&self) -> SymplecticSpectrum {
        let delta_sigma = self.det_a + self.det_b + 2.0 * self.det_c;
        let delta_tilde = self.det_a + self.det_b - 2.0 * self.det_c;
        let (n_minus, n_plus) = symplectic_pair(delta_sigma, self.det_sigma);
        let (nu_tilde_minus, nu_tilde_plus) = symplectic_pair(delta_tilde, self.det_sigma);
        SymplecticSpectrum { n_minus, n_plus, nu_tilde_minus, nu_tilde_plus, delta_sigma, delta_tilde }
    }

    /// Uncertainty principle in symplectic form, `n_− ≥ 1/2 − 1e−8`.
    pub fn is_physical(&self) -> bool {
        self.spectrum().n_minus >= 0.5 - PHYSICAL_TOL
    }
}

/// `S = f(n_−) + f(n_+)`.
pub fn von_neumann_entropy(cov: &TwoModeCovariance) -> Result<f64> {
    let sp = cov.spectrum();
    Ok(entropy_f(sp.n_minus)? + entropy_f(sp.n_plus)?)
}

/// `S_L = 1 − 1/(4 √det σ)`.
pub fn linear_entropy(cov: &TwoModeCovariance) -> Result<f64> {
    let det = cov.det_sigma();
    if !(det >= 1.0 / 16.0 - 1e-10) {
        return Err(SbmError::Unphysical(format!("det σ = {det} below 1/16")));
    }
    let purity = (1.0 / (4.0 * det.max(1.0 / 16.0).sqrt())).min(1.0);
    Ok(1.0 - purity)
}

/// `I = f(a) + f(b) − f(n_−) − f(n_+)` with `a = √det A`, `b = √det B`.
pub fn mutual_information(cov: &TwoModeCovariance) -> Result<f64> {
    Ok(entropy_f(cov.det_a().sqrt())? + entropy_f(cov.det_b().sqrt())? - von_neumann_entropy(cov)?)
}

/// `E_N = max{0, −log₂ 2ν̃_−}` in bits.
pub fn log_negativity(cov: &TwoModeCovariance) -> f64 {
    let nu = cov.spectrum().nu_tilde_minus;
    (-(2.0 * nu).log2()).max(0.0)
}

/// Intermediate quantities of the closed-form Gaussian discord (measurement on mode `l`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDiscordParams {
    pub a: f64,
    pub b: f64,
    /// `4 det A`.
    pub alpha: f64,
    /// `4 det B`.
    pub beta: f64,
    /// `4 det C`.
    pub gamma: f64,
    /// `16 det σ`.
    pub delta: f64,
    /// Branch discriminant `(1+β)γ²(α+δ) − (δ−αβ)²`.
    pub branch: f64,
    pub det_eps: f64,
    pub e: f64,
}

/// `|β − 1|` below which the first branch is replaced by the second; both
/// agree on the branch boundary, which passes through `β = 1`.
const BETA_ONE_TOL: f64 = 1e-9;

impl GaussianDiscordParams {
    pub fn from_covariance(cov: &TwoModeCovariance) -> Result<Self> {
        let alpha = 4.0 * cov.det_a();
        let beta = 4.0 * cov.det_b();
        let gamma = 4.0 * cov.det_c();
        let delta = 16.0 * cov.det_sigma();
        let branch = (1.0 + beta) * gamma * gamma * (alpha + delta) - (delta - alpha * beta).powi(2);
        let det_eps = if branch >= 0.0 && (beta - 1.0).abs() > BETA_ONE_TOL {
            Self::first_branch(alpha, beta, gamma, delta)
        } else {
            Self::second_branch(alpha, beta, gamma, delta)
        };
        if !(det_eps >= 0.25 - PHYSICAL_TOL) {
            return Err(SbmError::Unphysical(format!(
                "conditional determinant {det_eps} below 1/4 (α={alpha}, β={beta}, γ={gamma}, δ={delta}, Γ={branch})"
            )));
        }
        Ok(Self { a: cov.det_a().sqrt(), b: cov.det_b().sqrt(), alpha, beta, gamma, delta, branch, det_eps, e: det_eps.sqrt() })
    }

    /// `det ε` for `Γ ≥ 0`.
    pub fn first_branch(alpha: f64, beta: f64, gamma: f64, delta: f64) -> f64 {
        let root = (gamma * gamma + (beta - 1.0) * (delta - alpha)).max(0.0).sqrt();
        (gamma.abs() + root).powi(2) / (4.0 * (beta - 1.0).powi(2))
    }

    /// `det ε` for `Γ < 0`.
    pub fn second_branch(alpha: f64, beta: f64, gamma: f64, delta: f64) -> f64 {
        let g2 = gamma * gamma;
        let inner = (g2 * g2 + (delta - alpha * beta).powi(2) - 2.0 * g2 * (alpha * beta + delta)).max(0.0);
        (alpha * beta - g2 + delta - inner.sqrt()) / (8.0 * beta)
    }
}

/// Discord and classical correlation in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordResult {
    pub discord: f64,
    pub classical: f64,
    pub params: GaussianDiscordParams,
}

/// `D = f(b) + f(e) − f(n_−) − f(n_+)`; the classical part is `I − D`.
pub fn gaussian_discord(cov: &TwoModeCovariance) -> Result<DiscordResult> {
    let params = GaussianDiscordParams::from_covariance(cov)?;
    let joint = von_neumann_entropy(cov)?;
    let discord = entropy_f(params.b)? + entropy_f(params.e)? - joint;
    let mutual = entropy_f(params.a)? + entropy_f(params.b)? - joint;
    Ok(DiscordResult { discord, classical: mutual - discord, params })
}

/// All pair measures at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasures {
    pub entropy: f64,
    pub linear_entropy: f64,
    pub mutual_information: f64,
    pub log_negativity: f64,
    pub discord: f64,
    pub classical: f64,
    pub physical: bool,
}

impl GaussianMeasures {
    /// Placeholder for a pair whose covariance is unphysical: all measures
    /// zero, `physical = false`.
    pub fn excluded() -> Self {
        Self {
            entropy: 0.0,
            linear_entropy: 0.0,
            mutual_information: 0.0,
            log_negativity: 0.0,
            discord: 0.0,
            classical: 0.0,
            physical: false,
        }
    }

    pub fn evaluate(cov: &TwoModeCovariance) -> Result<Self> {
        let d = gaussian_discord(cov)?;
        Ok(Self {
            entropy: von_neumann_entropy(cov)?,
            linear_entropy: linear_entropy(cov)?,
            mutual_information: mutual_information(cov)?,
            log_negativity: log_negativity(cov),
            discord: d.discord,
            classical: d.classical,
            physical: cov.is_physical(),
        })
    }
}
