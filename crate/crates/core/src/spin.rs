//! Two-spin reduced density matrix and the correlation and entanglement
//! measures built from it. All logarithms are base 2.
//!
//! Basis order is `{++, +−, −+, −−}` with `+` the `σ_z = +1` state; spin 1 is
//! the left factor.

use std::fmt::Write as _;

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::ansatz::{SpinModel, VariationalState};
use crate::error::{Result, SbmError};

pub type C64 = Complex<f64>;

/// Eigenvalues of `ρ` in `[−EIG_FLOOR, 0)` are treated as zero; below that ρ is rejected.
pub const EIG_FLOOR: f64 = 1e-10;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn pauli(i: usize) -> Matrix2<C64> {
    let (z, o, im) = (c(0.0), c(1.0), C64::new(0.0, 1.0));
    match i {
        0 => Matrix2::new(z, o, o, z),
        1 => Matrix2::new(z, -im, im, z),
        _ => Matrix2::new(o, z, z, -o),
    }
}

fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// `h(x) = −x log₂ x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    let x = x.clamp(0.0, 1.0);
    term(x) + term(1.0 - x)
}

/// Entropy (bits) of a qubit with Bloch vector length `r`.
fn qubit_entropy(r: f64) -> f64 {
    binary_entropy(0.5 * (1.0 + r.min(1.0)))
}

fn hermitian_eigenvalues(m: &Matrix4<C64>) -> [f64; 4] {
    let h = (m + m.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(h);
    let mut v = [0.0; 4];
    for (dst, src) in v.iter_mut().zip(eig.eigenvalues.iter()) {
        *dst = *src;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn entropy_of_spectrum(eigs: &[f64]) -> f64 {
    eigs.iter().map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 }).sum()
}

/// Reduced density matrix of the two spins with its Bloch decomposition
/// `ρ = ¼(𝟙⊗𝟙 + a·σ⊗𝟙 + 𝟙⊗b·σ + Σ T_ij σ_i⊗σ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSpinDensity {
    pub rho: Matrix4<C64>,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub t: nalgebra::Matrix3<f64>,
}

impl ReducedSpinDensity {
    /// Validates trace, hermiticity and positivity, then computes the Bloch form.
    pub fn from_matrix(rho: Matrix4<C64>) -> Result<Self> {
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(SbmError::Unphysical(format!("trace {tr} differs from 1")));
        }
        let herm = (rho - rho.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if herm > 1e-12 {
            return Err(SbmError::Unphysical(format!("density matrix not Hermitian ({herm:e})")));
        }
        let eigs = hermitian_eigenvalues(&rho);
        if eigs[3] < -EIG_FLOOR {
            return Err(SbmError::Unphysical(format!("negative eigenvalue {}", eigs[3])));
        }
        let id = Matrix2::identity();
        let expect = |op: Matrix4<C64>| (rho * op).trace().re;
        let a = Vector3::from_fn(|i, _| expect(kron(&pauli(i), &id)));
        let b = Vector3::from_fn(|i, _| expect(kron(&id, &pauli(i))));
        let t = nalgebra::Matrix3::from_fn(|i, j| expect(kron(&pauli(i), &pauli(j))));
        Ok(Self { rho, a, b, t })
    }

    /// Real symmetric density matrix given as nested rows.
    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(SbmError::LengthMismatch { expected: 4, got: rows.len() });
        }
        Self::from_matrix(Matrix4::from_fn(|r, col| c(rows[r][col])))
    }

    /// Pure state `|ψ⟩⟨ψ|` from (unnormalized) amplitudes.
    pub fn pure(psi: [C64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(SbmError::DegenerateNorm(norm));
        }
        Self::from_matrix(Matrix4::from_fn(|r, col| psi[r] * psi[col].conj() / c(norm)))
    }

    /// Eigenvalues in descending order with the small-negative floor applied.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut e = hermitian_eigenvalues(&self.rho);
        for v in &mut e {
            *v = v.max(0.0);
        }
        e
    }

    /// 16 rows `i,j,re,im` (row-major, 0-based indices).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,re,im\n");
        for r in 0..4 {
            for col in 0..4 {
                let z = self.rho[(r, col)];
                let _ = writeln!(out, "{r},{col},{:.17e},{:.17e}", z.re, z.im);
            }
        }
        out
    }

    /// Same state with the two spins exchanged.
    pub fn swapped(&self) -> Self {
        let perm = [0, 2, 1, 3];
        let rho = Matrix4::from_fn(|r, col| self.rho[(perm[r], perm[col])]);
        Self::from_matrix(rho).expect("exchange preserves validity")
    }

    /// Applies `U₁ ⊗ U₂`.
    pub fn rotated(&self, u1: &Matrix2<C64>, u2: &Matrix2<C64>) -> Result<Self> {
        let u = kron(u1, u2);
        Self::from_matrix(u * self.rho * u.adjoint())
    }
}

/// Reduced spin density of a two-spin variational state.
pub fn reduced_density(state: &VariationalState) -> Result<ReducedSpinDensity> {
    if state.model() != SpinModel::Two {
        return Err(SbmError::Config("reduced two-spin density needs a two-spin state".into()));
    }
    let rho = state.spin_density()?;
    ReducedSpinDensity::from_real(&rho)
}

/// `(S_vN, S_L)` of the spin system; `S_vN` in bits.
pub fn system_entropies(rho: &ReducedSpinDensity) -> (f64, f64) {
    let e = rho.eigenvalues();
    let purity: f64 = (rho.rho * rho.rho).trace().re;
    (entropy_of_spectrum(&e), 1.0 - purity)
}

/// Wootters concurrence. With `ρ = X X†` built from the eigenvectors of ρ,
/// the `λ_i` are the singular values of `Xᵀ (σ_y⊗σ_y) X`; components whose
/// eigenvalue is at rounding level are dropped so that no square root of noise
/// enters.
pub fn concurrence(rho: &ReducedSpinDensity) -> f64 {
    let yy = kron(&pauli(1), &pauli(1));
    let h = (rho.rho + rho.rho.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(h);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let keep: Vec<usize> = (0..4).filter(|&i| eig.eigenvalues[i] > 1e-14 * top).collect();
    let x = nalgebra::DMatrix::from_fn(4, keep.len(), |r, k| {
        eig.eigenvectors[(r, keep[k])] * c(eig.eigenvalues[keep[k]].sqrt())
    });
    let yy = nalgebra::DMatrix::from_fn(4, 4, |r, col| yy[(r, col)]);
    let tau = x.transpose() * yy * &x;
    let mut lam: Vec<f64> = tau.singular_values().iter().copied().collect();
    lam.resize(4, 0.0);
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

/// `S_E = h((1 + √(1 − C²))/2)`.
pub fn entanglement_of_formation(concurrence: f64) -> f64 {
    let cc = concurrence.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - cc * cc).sqrt()))
}

fn partial_transpose_first(rho: &Matrix4<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| {
        let (i1, i2) = (r / 2, r % 2);
        let (j1, j2) = (col / 2, col % 2);
        rho[(j1 * 2 + i2, i1 * 2 + j2)]
    })
}

/// Negativity `N = (‖ρ^{T₁}‖₁ − 1)/2` and `E_N = log₂(2N + 1)`.
pub fn negativity_measures(rho: &ReducedSpinDensity) -> (f64, f64) {
    let pt = partial_transpose_first(&rho.rho);
    let trace_norm: f64 = hermitian_eigenvalues(&pt).iter().map(|v| v.abs()).sum();
    let n = (0.5 * (trace_norm - 1.0)).max(0.0);
    (n, (2.0 * n + 1.0).log2())
}

/// Entropies (bits) of the single-spin marginals.
pub fn marginal_entropies(rho: &ReducedSpinDensity) -> (f64, f64) {
    (qubit_entropy(rho.a.norm()), qubit_entropy(rho.b.norm()))
}

/// `I = S(ρ₁) + S(ρ₂) − S(ρ)`.
pub fn spin_mutual_information(rho: &ReducedSpinDensity) -> f64 {
    let (s1, s2) = marginal_entropies(rho);
    s1 + s2 - system_entropies(rho).0
}

/// `⟨σ_z1 σ_z2⟩ − ⟨σ_z1⟩⟨σ_z2⟩`.
pub fn zz_correlation(rho: &ReducedSpinDensity) -> f64 {
    rho.t[(2, 2)] - rho.a[2] * rho.b[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordOptions {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Simplex refinement from the best grid point.
    pub refine: bool,
}

impl Default for DiscordOptions {
    fn default() -> Self {
        Self { n_theta: 64, n_phi: 128, refine: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinDiscord {
    /// `D(ρ_{2|1})` in bits.
    pub discord: f64,
    pub classical: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Average conditional entropy of spin 2 after the projective measurement
/// `Π_± = ½(𝟙 ± n·σ)` on spin 1, `n = (sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn conditional_entropy(rho: &ReducedSpinDensity, theta: f64, phi: f64) -> f64 {
    let n = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
    let an = rho.a.dot(&n);
    let tn = rho.t.transpose() * n;
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let weight = 1.0 + sign * an;
        let p = 0.5 * weight;
        if p < 1e-12 {
            continue;
        }
        let r = (rho.b + tn * sign) / weight;
        total += p * qubit_entropy(r.norm());
    }
    total
}

/// Nelder–Mead on a 2D function; returns the best vertex and value.
fn simplex_2d(f: impl Fn(f64, f64) -> f64, start: (f64, f64), step: f64) -> ((f64, f64), f64) {
    let mut pts = [start, (start.0 + step, start.1), (start.0, start.1 + step)];
    let mut vals = pts.map(|p| f(p.0, p.1));
    for _ in 0..500 {
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);
        let size = ((pts[1].0 - pts[0].0).abs() + (pts[1].1 - pts[0].1).abs())
            .max((pts[2].0 - pts[0].0).abs() + (pts[2].1 - pts[0].1).abs());
        if size < 1e-11 || (vals[2] - vals[0]).abs() < 1e-15 {
            break;
        }
        let cen = ((pts[0].0 + pts[1].0) / 2.0, (pts[0].1 + pts[1].1) / 2.0);
        let at = |t: f64| (cen.0 + t * (pts[2].0 - cen.0), cen.1 + t * (pts[2].1 - cen.1));
        let refl = at(-1.0);
        let fr = f(refl.0, refl.1);
        if fr < vals[0] {
            let exp = at(-2.0);
            let fe = f(exp.0, exp.1);
            if fe < fr {
                pts[2] = exp;
                vals[2] = fe;
            } else {
                pts[2] = refl;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = refl;
            vals[2] = fr;
        } else {
            let con = if fr < vals[2] { at(-0.5) } else { at(0.5) };
            let fc = f(con.0, con.1);
            if fc < vals[2].min(fr) {
                pts[2] = con;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = ((pts[i].0 + pts[0].0) / 2.0, (pts[i].1 + pts[0].1) / 2.0);
                    vals[i] = f(pts[i].0, pts[i].1);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    (pts[best], vals[best])
}

/// Projective-measurement discord with measurement on spin 1: coarse grid over
/// `(θ, φ) ∈ [0, π] × [0, 2π)` followed by simplex refinement.
pub fn spin_discord(rho: &ReducedSpinDensity, opts: &DiscordOptions) -> Result<SpinDiscord> {
    if opts.n_theta < 2 || opts.n_phi < 1 {
        return Err(SbmError::Config("discord grid needs n_theta ≥ 2 and n_phi ≥ 1".into()));
    }
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..opts.n_theta {
        let theta = std::f64::consts::PI * i as f64 / (opts.n_theta - 1) as f64;
        for j in 0..opts.n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / opts.n_phi as f64;
            let v = conditional_entropy(rho, theta, phi);
            if v < best.0 {
                best = (v, theta, phi);
            }
        }
    }
    if opts.refine {
        let step = std::f64::consts::PI / opts.n_theta as f64;
        let ((t, p), v) = simplex_2d(|t, p| conditional_entropy(rho, t, p), (best.1, best.2), step);
        if v < best.0 {
            best = (v, t, p);
        }
    }
    let joint = system_entropies(rho).0;
    let (s1, s2) = marginal_entropies(rho);
    let discord = s1 - joint + best.0;
    Ok(SpinDiscord { discord, classical: s2 - best.0, theta: best.1, phi: best.2.rem_euclid(2.0 * std::f64::consts::PI) })
}

/// All spin measures of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinMeasures {
    pub entropy: f64,
    pub linear_entropy: f64,
    pub zz_correlation: f64,
    pub mutual_information: f64,
    pub concurrence: f64,
    pub entanglement_of_formation: f64,
    pub negativity: f64,
    pub log_negativity: f64,
    pub discord: f64,
    pub classical: f64,
}

impl SpinMeasures {
    pub fn evaluate(rho: &ReducedSpinDensity, opts: &DiscordOptions) -> Result<Self> {
        let (entropy, linear_entropy) = system_entropies(rho);
        let conc = concurrence(rho);
        let (negativity, log_negativity) = negativity_measures(rho);
        let d = spin_discord(rho, opts)?;
        Ok(Self {
            entropy,
            linear_entropy,
            zz_correlation: zz_correlation(rho),
            mutual_information: spin_mutual_information(rho),
            concurrence: conc,
            entanglement_of_formation: entanglement_of_formation(conc),
            negativity,
            log_negativity,
            discord: d.discord,
            classical: d.classical,
        })
    }
}
