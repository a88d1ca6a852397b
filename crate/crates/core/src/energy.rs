//! Energy functional `E = 𝓗/𝒩` of the multi-D1 ansatz and its analytic gradient.
//!
//! With `O_ij = ⟨u_i|u_j⟩` the coherent overlaps, the Hamiltonian expectation is
//! `𝓗 = Σ_ij w_i w_j O_ij h_ij` where, for two components in the same spin
//! configuration `c`,
//!
//! `h_ij = e_c + Σ_k ω_k u_ik u_jk + (z_c/2) Σ_k λ_k (u_ik + u_jk)`
//!
//! (`e_c` the bias/Ising constant, `z_c` the total σ_z), and `h_ij = −Δ/2` for
//! components in configurations linked by a single σ_x flip.

use crate::ansatz::{ModelParams, SpinStructure, VariationalState};
use crate::error::{Result, SbmError};

const NORM_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
enum PairKind {
    Same { config: usize },
    Hop,
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    i: usize,
    j: usize,
    kind: PairKind,
}

/// Gradient with the same layout as [`VariationalState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateGradient {
    pub weights: Vec<f64>,
    pub displacements: Vec<f64>,
}

impl StateGradient {
    pub fn max_abs(&self) -> f64 {
        self.weights.iter().chain(&self.displacements).fold(0.0f64, |m, g| m.max(g.abs()))
    }
}

/// Precomputed pair structure and mode table for repeated evaluations.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    spin: SpinStructure,
    pairs: Vec<Pair>,
    omega: Vec<f64>,
    lambda: Vec<f64>,
    n_components: usize,
    m: usize,
}

/// Per-pair cached quantities of one evaluation.
#[derive(Debug, Clone, Default)]
pub(crate) struct PairCache {
    pub overlap: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub hamiltonian: f64,
    pub norm: f64,
    pub energy: f64,
}

impl EnergyModel {
    pub fn new(state: &VariationalState, params: &ModelParams) -> Result<Self> {
        state.check_compatible(params)?;
        let model = state.model();
        let spin = SpinStructure::new(model, params);
        let n = state.n_coherent();
        let mut pairs = Vec::new();
        for c in 0..model.n_configs() {
            for a in 0..n {
                for b in a..n {
                    pairs.push(Pair { i: c * n + a, j: c * n + b, kind: PairKind::Same { config: c } });
                }
            }
        }
        for &(c, d) in &spin.links {
            for a in 0..n {
                for b in 0..n {
                    pairs.push(Pair { i: c * n + a, j: d * n + b, kind: PairKind::Hop });
                }
            }
        }
        Ok(Self {
            spin,
            pairs,
            omega: params.bath.omegas(),
            lambda: params.bath.lambdas(),
            n_components: state.n_components(),
            m: state.n_modes(),
        })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    fn fill_cache(&self, state: &VariationalState, cache: &mut PairCache) {
        cache.overlap.resize(self.pairs.len(), 0.0);
        cache.h.resize(self.pairs.len(), 0.0);
        for (p, pair) in self.pairs.iter().enumerate() {
            let ui = state.row(pair.i);
            let uj = state.row(pair.j);
            match pair.kind {
                PairKind::Same { config } => {
                    let mut d2 = 0.0;
                    let mut bath = 0.0;
                    let mut coup = 0.0;
                    for k in 0..self.m {
                        let (a, b) = (ui[k], uj[k]);
                        d2 += (a - b) * (a - b);
                        bath += self.omega[k] * a * b;
                        coup += self.lambda[k] * (a + b);
                    }
                    cache.overlap[p] = (-0.5 * d2).exp();
                    cache.h[p] = self.spin.diag[config] + bath + 0.5 * self.spin.zsum[config] * coup;
                }
                PairKind::Hop => {
                    let d2: f64 = ui.iter().zip(uj).map(|(a, b)| (a - b) * (a - b)).sum();
                    cache.overlap[p] = (-0.5 * d2).exp();
                    cache.h[p] = self.spin.hop;
                }
            }
        }
    }

    fn reduce(&self, state: &VariationalState, cache: &PairCache) -> Result<Evaluation> {
        let w = state.weights();
        let mut ham = 0.0;
        let mut norm = 0.0;
        for (p, pair) in self.pairs.iter().enumerate() {
            let mult = if pair.i == pair.j { 1.0 } else { 2.0 };
            let ww = mult * w[pair.i] * w[pair.j] * cache.overlap[p];
            ham += ww * cache.h[p];
            if matches!(pair.kind, PairKind::Same { .. }) {
                norm += ww;
            }
        }
        if !(norm >= NORM_FLOOR) {
            return Err(SbmError::DegenerateNorm(norm));
        }
        Ok(Evaluation { hamiltonian: ham, norm, energy: ham / norm })
    }

    pub fn evaluate(&self, state: &VariationalState) -> Result<Evaluation> {
        self.check_shape(state)?;
        let mut cache = PairCache::default();
        self.fill_cache(state, &mut cache);
        self.reduce(state, &cache)
    }

    /// Energy and gradient with respect to every weight and displacement.
    pub fn evaluate_with_gradient(&self, state: &VariationalState) -> Result<(Evaluation, StateGradient)> {
        self.check_shape(state)?;
        let mut cache = PairCache::default();
        self.fill_cache(state, &mut cache);
        let ev = self.reduce(state, &cache)?;
        let e = ev.energy;
        let inv_norm = 1.0 / ev.norm;
        let w = state.weights();
        let mut gw = vec![0.0; self.n_components];
        let mut gu = vec![0.0; self.n_components * self.m];
        for (p, pair) in self.pairs.iter().enumerate() {
            let (i, j) = (pair.i, pair.j);
            let o = cache.overlap[p];
            let (shifted, zhalf) = match pair.kind {
                PairKind::Same { config } => (cache.h[p] - e, Some(0.5 * self.spin.zsum[config])),
                PairKind::Hop => (cache.h[p], None),
            };
            gw[i] += 2.0 * inv_norm * w[j] * o * shifted;
            if i != j {
                gw[j] += 2.0 * inv_norm * w[i] * o * shifted;
            }
            let coef = 2.0 * inv_norm * w[i] * w[j] * o;
            if coef == 0.0 {
                continue;
            }
            let ui = state.row(i);
            let uj = state.row(j);
            if i == j {
                if let Some(zh) = zhalf {
                    let gi = &mut gu[i * self.m..(i + 1) * self.m];
                    for k in 0..self.m {
                        gi[k] += coef * (self.omega[k] * ui[k] + zh * self.lambda[k]);
                    }
                }
                continue;
            }
            let (lo, hi) = gu.split_at_mut(j * self.m);
            // i < j holds for same-configuration pairs; hop pairs have config(i) < config(j).
            let gi = &mut lo[i * self.m..(i + 1) * self.m];
            let gj = &mut hi[..self.m];
            match zhalf {
                Some(zh) => {
                    for k in 0..self.m {
                        let diff = uj[k] - ui[k];
                        let force = zh * self.lambda[k];
                        gi[k] += coef * (diff * shifted + self.omega[k] * uj[k] + force);
                        gj[k] += coef * (-diff * shifted + self.omega[k] * ui[k] + force);
                    }
                }
                None => {
                    for k in 0..self.m {
                        let diff = coef * (uj[k] - ui[k]) * shifted;
                        gi[k] += diff;
                        gj[k] -= diff;
                    }
                }
            }
        }
        Ok((ev, StateGradient { weights: gw, displacements: gu }))
    }

    /// Hamiltonian and overlap matrices in the basis of coherent components,
    /// row-major `K × K`. The overlap matrix vanishes between different spin
    /// configurations.
    pub(crate) fn weight_matrices(&self, state: &VariationalState) -> (Vec<f64>, Vec<f64>) {
        let mut cache = PairCache::default();
        self.fill_cache(state, &mut cache);
        let kk = self.n_components;
        let mut h = vec![0.0; kk * kk];
        let mut s = vec![0.0; kk * kk];
        for (p, pair) in self.pairs.iter().enumerate() {
            let hv = cache.overlap[p] * cache.h[p];
            h[pair.i * kk + pair.j] = hv;
            h[pair.j * kk + pair.i] = hv;
            if matches!(pair.kind, PairKind::Same { .. }) {
                s[pair.i * kk + pair.j] = cache.overlap[p];
                s[pair.j * kk + pair.i] = cache.overlap[p];
            }
        }
        (h, s)
    }

    pub(crate) fn n_components(&self) -> usize {
        self.n_components
    }

    fn check_shape(&self, state: &VariationalState) -> Result<()> {
        if state.n_components() != self.n_components {
            return Err(SbmError::LengthMismatch { expected: self.n_components, got: state.n_components() });
        }
        if state.n_modes() != self.m {
            return Err(SbmError::LengthMismatch { expected: self.m, got: state.n_modes() });
        }
        Ok(())
    }
}

/// `E = ⟨Ψ|Ĥ|Ψ⟩ / ⟨Ψ|Ψ⟩`.
pub fn energy(state: &VariationalState, params: &ModelParams) -> Result<f64> {
    Ok(EnergyModel::new(state, params)?.evaluate(state)?.energy)
}

/// Analytic partial derivatives of `E` with respect to every variational parameter.
pub fn energy_gradient(state: &VariationalState, params: &ModelParams) -> Result<StateGradient> {
    Ok(EnergyModel::new(state, params)?.evaluate_with_gradient(state)?.1)
}
