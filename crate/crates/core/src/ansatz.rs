//! Multi-D1 coherent-state ansatz for the single-spin and two-spin models.
//!
//! Every spin configuration `c` (|+⟩, |−⟩ for one spin; |++⟩, |+−⟩, |−+⟩, |−−⟩
//! for two) carries `N` weighted multimode coherent states. A coherent
//! component is addressed by the flat index `i = c·N + n`; its displacement
//! row holds one real amplitude per bath mode.

use serde::{Deserialize, Serialize};

use crate::bath::DiscretizedBath;
use crate::error::{Result, SbmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinModel {
    Single,
    Two,
}

impl SpinModel {
    pub fn n_spins(self) -> usize {
        match self {
            SpinModel::Single => 1,
            SpinModel::Two => 2,
        }
    }

    pub fn n_configs(self) -> usize {
        1 << self.n_spins()
    }

    /// Labels in basis order.
    pub fn config_labels(self) -> &'static [&'static str] {
        match self {
            SpinModel::Single => &["+", "-"],
            SpinModel::Two => &["++", "+-", "-+", "--"],
        }
    }

    /// σ_z eigenvalue of spin `spin` in configuration `config`.
    pub fn sigma_z(self, config: usize, spin: usize) -> f64 {
        let bit = (config >> (self.n_spins() - 1 - spin)) & 1;
        if bit == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl std::str::FromStr for SpinModel {
    type Err = SbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "1" => Ok(SpinModel::Single),
            "two" | "two-spin" | "2" => Ok(SpinModel::Two),
            other => Err(SbmError::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// Hamiltonian parameters. `k_ising` only enters the two-spin model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub delta: f64,
    pub k_ising: f64,
    pub bath: DiscretizedBath,
}

impl ModelParams {
    pub fn new(epsilon: f64, delta: f64, k_ising: f64, bath: DiscretizedBath) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(SbmError::Config(format!("tunneling must be non-negative, got {delta}")));
        }
        if !epsilon.is_finite() || !k_ising.is_finite() {
            return Err(SbmError::Config("bias and Ising coupling must be finite".into()));
        }
        Ok(Self { epsilon, delta, k_ising, bath })
    }

    pub fn n_modes(&self) -> usize {
        self.bath.len()
    }
}

/// Spin part of the Hamiltonian in the σ_z product basis: diagonal constants,
/// the total σ_z that multiplies the bath coupling, and the σ_x links.
#[derive(Debug, Clone)]
pub(crate) struct SpinStructure {
    pub diag: Vec<f64>,
    pub zsum: Vec<f64>,
    /// `(c, c')` with `c < c'`, amplitude `-Δ/2`.
    pub links: Vec<(usize, usize)>,
    pub hop: f64,
}

impl SpinStructure {
    pub fn new(model: SpinModel, params: &ModelParams) -> Self {
        let nc = model.n_configs();
        let ns = model.n_spins();
        let mut diag = vec![0.0; nc];
        let mut zsum = vec![0.0; nc];
        for c in 0..nc {
            let zs: Vec<f64> = (0..ns).map(|s| model.sigma_z(c, s)).collect();
            let total: f64 = zs.iter().sum();
            zsum[c] = total;
            diag[c] = 0.5 * params.epsilon * total;
            if ns == 2 {
                diag[c] += 0.25 * params.k_ising * zs[0] * zs[1];
            }
        }
        let mut links = Vec::new();
        for c in 0..nc {
            for s in 0..ns {
                let partner = c ^ (1 << (ns - 1 - s));
                if c < partner {
                    links.push((c, partner));
                }
            }
        }
        links.sort_unstable();
        Self { diag, zsum, links, hop: -0.5 * params.delta }
    }
}

/// Variational parameters of the multi-D1 ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    model: SpinModel,
    n: usize,
    m: usize,
    /// `n_configs · N` weights, configuration-major.
    weights: Vec<f64>,
    /// `n_configs · N · M` displacements, row-major per component.
    displacements: Vec<f64>,
}

impl VariationalState {
    pub fn zeros(model: SpinModel, n: usize, m: usize) -> Self {
        let k = model.n_configs() * n;
        Self { model, n, m, weights: vec![0.0; k], displacements: vec![0.0; k * m] }
    }

    /// Builds a state from per-configuration weight vectors and displacement matrices
    /// (`rows[c][n][k]`).
    pub fn from_parts(model: SpinModel, weights: &[Vec<f64>], rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let nc = model.n_configs();
        if weights.len() != nc || rows.len() != nc {
            return Err(SbmError::LengthMismatch { expected: nc, got: weights.len().min(rows.len()) });
        }
        let n = weights[0].len();
        if n == 0 {
            return Err(SbmError::Config("ansatz needs at least one coherent state".into()));
        }
        let m = rows[0].first().map_or(0, Vec::len);
        let mut state = Self::zeros(model, n, m);
        for c in 0..nc {
            if weights[c].len() != n {
                return Err(SbmError::LengthMismatch { expected: n, got: weights[c].len() });
            }
            if rows[c].len() != n {
                return Err(SbmError::LengthMismatch { expected: n, got: rows[c].len() });
            }
            for j in 0..n {
                if rows[c][j].len() != m {
                    return Err(SbmError::LengthMismatch { expected: m, got: rows[c][j].len() });
                }
                let i = c * n + j;
                state.weights[i] = weights[c][j];
                state.row_mut(i).copy_from_slice(&rows[c][j]);
            }
        }
        state.check_finite()?;
        Ok(state)
    }

    /// `|+⟩ Σ A_n |f_n⟩ + |−⟩ Σ D_n |g_n⟩`.
    pub fn single_spin(a: Vec<f64>, d: Vec<f64>, f: Vec<Vec<f64>>, g: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_parts(SpinModel::Single, &[a, d], &[f, g])
    }

    /// Weights `A, B, C, D` and displacements `f, g, h, p` for `|++⟩, |+−⟩, |−+⟩, |−−⟩`.
    #[allow(clippy::too_many_arguments)]
    pub fn two_spin(
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
        f: Vec<Vec<f64>>,
        g: Vec<Vec<f64>>,
        h: Vec<Vec<f64>>,
        p: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::from_parts(SpinModel::Two, &[a, b, c, d], &[f, g, h, p])
    }

    pub fn model(&self) -> SpinModel {
        self.model
    }

    /// Number of coherent states per spin configuration.
    pub fn n_coherent(&self) -> usize {
        self.n
    }

    pub fn n_modes(&self) -> usize {
        self.m
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn config_of(&self, component: usize) -> usize {
        component / self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn displacements(&self) -> &[f64] {
        &self.displacements
    }

    pub fn displacements_mut(&mut self) -> &mut [f64] {
        &mut self.displacements
    }

    pub fn weight(&self, config: usize, n: usize) -> f64 {
        self.weights[config * self.n + n]
    }

    pub fn row(&self, component: usize) -> &[f64] {
        &self.displacements[component * self.m..(component + 1) * self.m]
    }

    pub fn row_mut(&mut self, component: usize) -> &mut [f64] {
        &mut self.displacements[component * self.m..(component + 1) * self.m]
    }

    pub fn config_weights(&self, config: usize) -> &[f64] {
        &self.weights[config * self.n..(config + 1) * self.n]
    }

    pub fn config_rows(&self, config: usize) -> Vec<Vec<f64>> {
        (0..self.n).map(|j| self.row(config * self.n + j).to_vec()).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.weights.iter().chain(&self.displacements).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(SbmError::Domain("non-finite variational parameter".into()))
        }
    }

    pub fn check_compatible(&self, params: &ModelParams) -> Result<()> {
        if params.n_modes() != self.m {
            return Err(SbmError::LengthMismatch { expected: params.n_modes(), got: self.m });
        }
        Ok(())
    }

    /// `𝒩 = ⟨Ψ|Ψ⟩`.
    pub fn norm(&self) -> f64 {
        let mut total = 0.0;
        for c in 0..self.model.n_configs() {
            for a in 0..self.n {
                let i = c * self.n + a;
                for b in 0..self.n {
                    let j = c * self.n + b;
                    total += self.weights[i] * self.weights[j] * overlap_unchecked(self.row(i), self.row(j));
                }
            }
        }
        total
    }

    /// Rescales the weights so that `𝒩 = 1` and makes the largest-magnitude weight positive.
    pub fn canonicalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 1e-300) {
            return Err(SbmError::DegenerateNorm(norm));
        }
        let mut scale = 1.0 / norm.sqrt();
        let largest = self
            .weights
            .iter()
            .copied()
            .fold(0.0f64, |acc, w| if w.abs() > acc.abs() { w } else { acc });
        if largest < 0.0 {
            scale = -scale;
        }
        for w in &mut self.weights {
            *w *= scale;
        }
        Ok(())
    }

    /// Image under the `ε = 0` symmetry `σ_x ⊗ Π_bath` (all spins flipped,
    /// `b_k → −b_k`): configuration `c` maps to its complement and the
    /// displacements change sign.
    pub fn parity_flipped(&self) -> Self {
        let nc = self.model.n_configs();
        let mut out = self.clone();
        for c in 0..nc {
            let flipped = nc - 1 - c;
            for j in 0..self.n {
                let src = c * self.n + j;
                let dst = flipped * self.n + j;
                out.weights[dst] = self.weights[src];
                for (o, &u) in out.displacements[dst * self.m..(dst + 1) * self.m]
                    .iter_mut()
                    .zip(self.row(src))
                {
                    *o = -u;
                }
            }
        }
        out
    }

    /// Spin density matrix `ρ[c, c'] = Σ w_{c n} w_{c' m} ⟨u_{c n}|u_{c' m}⟩ / 𝒩`.
    pub fn spin_density(&self) -> Result<Vec<Vec<f64>>> {
        let nc = self.model.n_configs();
        let mut rho = vec![vec![0.0; nc]; nc];
        for c in 0..nc {
            for d in c..nc {
                let mut acc = 0.0;
                for a in 0..self.n {
                    let i = c * self.n + a;
                    for b in 0..self.n {
                        let j = d * self.n + b;
                        acc += self.weights[i] * self.weights[j] * overlap_unchecked(self.row(i), self.row(j));
                    }
                }
                rho[c][d] = acc;
                rho[d][c] = acc;
            }
        }
        let norm: f64 = (0..nc).map(|c| rho[c][c]).sum();
        if !(norm > 1e-300) {
            return Err(SbmError::DegenerateNorm(norm));
        }
        for row in &mut rho {
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
        Ok(rho)
    }

    /// `⟨σ_z⟩` of each spin.
    pub fn sigma_z(&self) -> Result<Vec<f64>> {
        let rho = self.spin_density()?;
        Ok((0..self.model.n_spins())
            .map(|s| (0..self.model.n_configs()).map(|c| self.model.sigma_z(c, s) * rho[c][c]).sum())
            .collect())
    }

    /// `⟨σ_x⟩` of each spin.
    pub fn sigma_x(&self) -> Result<Vec<f64>> {
        let rho = self.spin_density()?;
        let ns = self.model.n_spins();
        Ok((0..ns)
            .map(|s| {
                let bit = 1 << (ns - 1 - s);
                (0..self.model.n_configs()).map(|c| rho[c][c ^ bit]).sum()
            })
            .collect())
    }
}

pub(crate) fn overlap_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-0.5 * d2).exp()
}

/// Overlap `⟨u|v⟩ = exp(Σ_k [u_k v_k − u_k²/2 − v_k²/2])` of two real multimode
/// coherent states.
pub fn coherent_overlap(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(SbmError::LengthMismatch { expected: u.len(), got: v.len() });
    }
    Ok(overlap_unchecked(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fock_amplitudes(u: f64, n_max: usize) -> Vec<f64> {
        let mut amp = vec![0.0; n_max + 1];
        amp[0] = (-0.5 * u * u).exp();
        for n in 1..=n_max {
            amp[n] = amp[n - 1] * u / (n as f64).sqrt();
        }
        amp
    }

    #[test]
    fn overlap_closed_forms() {
        assert_eq!(coherent_overlap(&[0.3, -1.2], &[0.3, -1.2]).unwrap(), 1.0);
        let v = coherent_overlap(&[1.0], &[-1.0]).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!(coherent_overlap(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn overlap_matches_fock_inner_product() {
        let u = [0.7, -0.4, 1.1];
        let v = [-0.2, 0.9, 0.5];
        let mut fock = 1.0;
        for k in 0..3 {
            let a = fock_amplitudes(u[k], 40);
            let b = fock_amplitudes(v[k], 40);
            fock *= a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
        }
        assert!((coherent_overlap(&u, &v).unwrap() - fock).abs() < 1e-10);
    }

    #[test]
    fn config_labels_and_signs() {
        let m = SpinModel::Two;
        assert_eq!(m.sigma_z(0, 0), 1.0);
        assert_eq!(m.sigma_z(1, 1), -1.0);
        assert_eq!(m.sigma_z(2, 0), -1.0);
        assert_eq!(m.sigma_z(3, 1), -1.0);
        assert_eq!(SpinModel::Single.sigma_z(1, 0), -1.0);
    }

    #[test]
    fn canonical_gauge() {
        let mut st = VariationalState::single_spin(vec![-3.0], vec![1.0], vec![vec![0.2]], vec![vec![-0.2]]).unwrap();
        st.canonicalize().unwrap();
        assert!((st.norm() - 1.0).abs() < 1e-14);
        assert!(st.weights()[0] > 0.0);
    }

    #[test]
    fn sigma_x_eigenstate() {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let st = VariationalState::single_spin(vec![w], vec![w], vec![vec![0.0; 3]], vec![vec![0.0; 3]]).unwrap();
        assert!((st.sigma_x().unwrap()[0] - 1.0).abs() < 1e-15);
        assert!(st.sigma_z().unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn rejects_ragged_input() {
        let err = VariationalState::single_spin(vec![1.0], vec![1.0, 2.0], vec![vec![0.0]], vec![vec![0.0]]);
        assert!(err.is_err());
        let err = VariationalState::single_spin(vec![f64::NAN], vec![1.0], vec![vec![0.0]], vec![vec![0.0]]);
        assert!(err.is_err());
    }
}
