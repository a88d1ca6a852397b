//! Bath moments of a variational state, evaluated exactly from coherent-state
//! matrix elements.
//!
//! With `X = (u + v)/√2` and `Q = (u − v)/√2` for a pair of components, the
//! pair contributions are `⟨x⟩ ∝ X`, `⟨x²⟩ ∝ X² + ½`, `⟨p²⟩ ∝ ½ − Q²`,
//! `⟨x_k x_l⟩ ∝ X_k X_l` and `⟨p_k p_l⟩ ∝ −Q_k Q_l`. Odd moments of `p` are
//! imaginary per pair and cancel between `(i, j)` and `(j, i)`, so `⟨p⟩ = 0`
//! and the two-mode covariance has the x/p block form exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ansatz::{overlap_unchecked, VariationalState};
use crate::bath::DiscretizedBath;
use crate::error::{Result, SbmError};
use crate::gaussian::{GaussianMeasures, TwoModeCovariance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMoments {
    pub k: usize,
    pub x: f64,
    pub p: f64,
    pub dx: f64,
    pub dp: f64,
}

/// Same-configuration component pairs with their normalized weights
/// `c_ij = w_i w_j ⟨u_i|u_j⟩ / 𝒩` (doubled for `i ≠ j`), so that `Σ c_ij = 1`.
pub struct PairWeights<'a> {
    state: &'a VariationalState,
    pairs: Vec<(usize, usize, f64)>,
    /// Per-configuration probability `⟨P_c⟩`.
    config_prob: Vec<f64>,
}

impl<'a> PairWeights<'a> {
    pub fn new(state: &'a VariationalState) -> Result<Self> {
        state.check_finite()?;
        let n = state.n_coherent();
        let nc = state.model().n_configs();
        let w = state.weights();
        let mut pairs = Vec::with_capacity(nc * n * (n + 1) / 2);
        let mut config_prob = vec![0.0; nc];
        for c in 0..nc {
            for a in 0..n {
                for b in a..n {
                    let (i, j) = (c * n + a, c * n + b);
                    let mult = if a == b { 1.0 } else { 2.0 };
                    let v = mult * w[i] * w[j] * overlap_unchecked(state.row(i), state.row(j));
                    pairs.push((i, j, v));
                    config_prob[c] += v;
                }
            }
        }
        let norm: f64 = config_prob.iter().sum();
        if !(norm > 1e-300) {
            return Err(SbmError::DegenerateNorm(norm));
        }
        for p in &mut pairs {
            p.2 /= norm;
        }
        for p in &mut config_prob {
            *p /= norm;
        }
        Ok(Self { state, pairs, config_prob })
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        let m = self.state.n_modes();
        if k >= m {
            return Err(SbmError::Domain(format!("mode index {k} out of range 0..{m}")));
        }
        Ok(())
    }

    fn sum_x(&self, i: usize, j: usize, k: usize) -> f64 {
        (self.state.row(i)[k] + self.state.row(j)[k]) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn diff_q(&self, i: usize, j: usize, k: usize) -> f64 {
        (self.state.row(i)[k] - self.state.row(j)[k]) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn mean_x(&self, k: usize) -> Result<f64> {
        self.check_mode(k)?;
        Ok(self.pairs.iter().map(|&(i, j, c)| c * self.sum_x(i, j, k)).sum())
    }

    pub fn moments(&self, k: usize) -> Result<ModeMoments> {
        let x = self.mean_x(k)?;
        let mut vx = 0.0;
        let mut vq = 0.0;
        for &(i, j, c) in &self.pairs {
            let dev = self.sum_x(i, j, k) - x;
            let q = self.diff_q(i, j, k);
            vx += c * dev * dev;
            vq += c * q * q;
        }
        Ok(ModeMoments { k, x, p: 0.0, dx: 0.5 + vx, dp: 0.5 - vq })
    }

    /// Connected `⟨x_k x_l⟩` and `⟨p_k p_l⟩`.
    pub fn correlations(&self, k: usize, l: usize, xk: f64, xl: f64) -> (f64, f64) {
        let mut cx = 0.0;
        let mut cp = 0.0;
        for &(i, j, c) in &self.pairs {
            cx += c * (self.sum_x(i, j, k) - xk) * (self.sum_x(i, j, l) - xl);
            cp -= c * self.diff_q(i, j, k) * self.diff_q(i, j, l);
        }
        (cx, cp)
    }

    pub fn covariance(&self, k: usize, l: usize) -> Result<TwoModeCovariance> {
        if k == l {
            return Err(SbmError::Domain("two-mode covariance needs distinct modes".into()));
        }
        let mk = self.moments(k)?;
        let ml = self.moments(l)?;
        let (cx, cp) = self.correlations(k, l, mk.x, ml.x);
        TwoModeCovariance::new(mk.dx, mk.dp, ml.dx, ml.dp, cx, cp)
    }

    /// `⟨(b_k + b_k†) P_c⟩` for every configuration `c`.
    pub fn conditional_displacement(&self, k: usize) -> Result<Vec<f64>> {
        self.check_mode(k)?;
        let n = self.state.n_coherent();
        let mut out = vec![0.0; self.config_prob.len()];
        for &(i, j, c) in &self.pairs {
            out[i / n] += c * (self.state.row(i)[k] + self.state.row(j)[k]);
        }
        Ok(out)
    }

    pub fn config_probabilities(&self) -> &[f64] {
        &self.config_prob
    }
}

pub fn mode_moments(state: &VariationalState, k: usize) -> Result<ModeMoments> {
    PairWeights::new(state)?.moments(k)
}

/// Covariance of modes `k` and `l` (block form; `A` belongs to `k`).
/// Physicality is not enforced here; see [`TwoModeCovariance::is_physical`].
pub fn two_mode_covariance(state: &VariationalState, k: usize, l: usize) -> Result<TwoModeCovariance> {
    PairWeights::new(state)?.covariance(k, l)
}

/// Per-mode displacement averages and fluctuations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementProfile {
    pub omega: Vec<f64>,
    pub xbar: Vec<f64>,
    pub dx: Vec<f64>,
    pub dp: Vec<f64>,
    /// `⟨(b+b†)(1+σ_z)⟩/2` (first spin for the two-spin model).
    pub fbar: Vec<f64>,
    /// `⟨(b+b†)(1−σ_z)⟩/2` (first spin for the two-spin model).
    pub gbar: Vec<f64>,
    /// `⟨(b+b†) P_c⟩` per configuration, `conditional[c][k]`.
    pub conditional: Vec<Vec<f64>>,
}

impl DisplacementProfile {
    /// `ΔX_b − 1/2` per mode.
    pub fn fluctuation(&self) -> Vec<f64> {
        self.dx.iter().map(|v| v - 0.5).collect()
    }

    /// CSV with header `k,omega_k,xbar,dX,dP,fbar,gbar,fluct`, `k` 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,omega_k,xbar,dX,dP,fbar,gbar,fluct\n");
        for k in 0..self.omega.len() {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                k + 1,
                self.omega[k],
                self.xbar[k],
                self.dx[k],
                self.dp[k],
                self.fbar[k],
                self.gbar[k],
                self.dx[k] - 0.5
            );
        }
        out
    }
}

pub fn displacement_profile(state: &VariationalState, bath: &DiscretizedBath) -> Result<DisplacementProfile> {
    let m = state.n_modes();
    if bath.len() != m {
        return Err(SbmError::LengthMismatch { expected: bath.len(), got: m });
    }
    let pw = PairWeights::new(state)?;
    let model = state.model();
    let nc = model.n_configs();
    let mut prof = DisplacementProfile {
        omega: bath.omegas(),
        xbar: Vec::with_capacity(m),
        dx: Vec::with_capacity(m),
        dp: Vec::with_capacity(m),
        fbar: Vec::with_capacity(m),
        gbar: Vec::with_capacity(m),
        conditional: vec![Vec::with_capacity(m); nc],
    };
    for k in 0..m {
        let mm = pw.moments(k)?;
        prof.xbar.push(mm.x);
        prof.dx.push(mm.dx);
        prof.dp.push(mm.dp);
        let cond = pw.conditional_displacement(k)?;
        let (mut up, mut down) = (0.0, 0.0);
        for (c, v) in cond.iter().enumerate() {
            if model.sigma_z(c, 0) > 0.0 {
                up += v;
            } else {
                down += v;
            }
            prof.conditional[c].push(*v);
        }
        prof.fbar.push(up);
        prof.gbar.push(down);
    }
    Ok(prof)
}

/// Pair measures between a reference mode `l` and one other mode `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub k: usize,
    pub omega_k: f64,
    pub cor_x: f64,
    pub cor_p: f64,
    pub measures: GaussianMeasures,
}

/// Sums of pair measures over `k ≠ l`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SummedIndicators {
    pub cor_x: f64,
    pub entropy: f64,
    pub mutual_information: f64,
    pub linear_entropy: f64,
    pub log_negativity: f64,
    pub discord: f64,
    /// Pairs whose covariance violates `n_− ≥ 1/2` beyond tolerance. Their
    /// measures are reported as zero.
    pub unphysical_pairs: usize,
}

/// Pair measures of every mode `k ≠ l` with the reference mode `l`
/// (default: the highest mode).
pub fn pair_sweep(state: &VariationalState, bath: &DiscretizedBath, reference: Option<usize>) -> Result<Vec<PairRecord>> {
    let m = state.n_modes();
    if bath.len() != m {
        return Err(SbmError::LengthMismatch { expected: bath.len(), got: m });
    }
    if m < 2 {
        return Err(SbmError::Domain("pair sweep needs at least two modes".into()));
    }
    let l = reference.unwrap_or(m - 1);
    let pw = PairWeights::new(state)?;
    let ml = pw.moments(l)?;
    let mut out = Vec::with_capacity(m - 1);
    for k in (0..m).filter(|&k| k != l) {
        let mk = pw.moments(k)?;
        let (cx, cp) = pw.correlations(k, l, mk.x, ml.x);
        let cov = TwoModeCovariance::new(mk.dx, mk.dp, ml.dx, ml.dp, cx, cp)?;
        if !cov.is_physical() {
            log::warn!("mode pair ({k}, {l}) violates the uncertainty bound (n_- = {:.3e})", cov.spectrum().n_minus);
        }
        let measures = match GaussianMeasures::evaluate(&cov) {
            Ok(g) => g,
            Err(SbmError::Unphysical(msg)) => {
                log::warn!("mode pair ({k}, {l}) excluded from measures: {msg}");
                GaussianMeasures::excluded()
            }
            Err(e) => return Err(e),
        };
        out.push(PairRecord { k, omega_k: bath.modes[k].omega, cor_x: cx, cor_p: cp, measures });
    }
    Ok(out)
}

pub fn summed_indicators(records: &[PairRecord]) -> SummedIndicators {
    let mut s = SummedIndicators::default();
    for r in records {
        s.cor_x += r.cor_x;
        s.entropy += r.measures.entropy;
        s.mutual_information += r.measures.mutual_information;
        s.linear_entropy += r.measures.linear_entropy;
        s.log_negativity += r.measures.log_negativity;
        s.discord += r.measures.discord;
        if !r.measures.physical {
            s.unphysical_pairs += 1;
        }
    }
    s
}

/// CSV of a pair sweep: `k,omega_k,CorX,CorP,S_b,S_L,I_b,E_N,D_b,C_b,physical`.
pub fn pair_sweep_csv(records: &[PairRecord]) -> String {
    let mut out = String::from("k,omega_k,CorX,CorP,S_b,S_L,I_b,E_N,D_b,C_b,physical\n");
    for r in records {
        let g = &r.measures;
        let _ = writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            r.k + 1,
            r.omega_k,
            r.cor_x,
            r.cor_p,
            g.entropy,
            g.linear_entropy,
            g.mutual_information,
            g.log_negativity,
            g.discord,
            g.classical,
            g.physical
        );
    }
    out
}
