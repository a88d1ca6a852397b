//! Multi-start minimization of the variational energy.
//!
//! One local optimization alternates two moves:
//!
//! * **relaxation**: the weights are set to the lowest generalized eigenvector
//!   of `(H, S)` for the current displacements, and every mode's displacement
//!   column is re-solved from the linearized self-consistency equations
//!   (overlaps and energy frozen), blended in with a damping factor `η`.
//!   `η` is halved whenever a relaxation step raises the energy.
//! * **descent**: once relaxation stalls, a preconditioned limited-memory
//!   quasi-Newton descent on the displacements (weights eliminated through the
//!   eigenproblem) drives the gradient down to the convergence threshold. The
//!   preconditioner is the per-mode block of the Hessian.
//!
//! Restarts are independent and run in parallel; each is seeded from the master
//! seed and its restart index, so results do not depend on scheduling.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{ModelParams, SpinModel, SpinStructure, VariationalState};
use crate::energy::{EnergyModel, StateGradient};
use crate::error::{Result, SbmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Coherent states per spin configuration.
    pub n_coherent: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Relative energy change per iteration below which a run may stop.
    pub energy_tol: f64,
    /// Gradient max-norm (at `𝒩 = 1`) required for convergence.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Bias added to ε during the search only, to pick one of the two
    /// degenerate localized branches. Zero leaves the search unbiased.
    pub bias_epsilon: f64,
    /// Number of relaxation sweeps tried before switching to quasi-Newton descent.
    pub relaxation_sweeps: usize,
    /// L-BFGS memory.
    pub memory: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            n_coherent: 4,
            restarts: 100,
            seed: 0,
            energy_tol: 1e-12,
            grad_tol: 1e-8,
            max_iter: 200_000,
            bias_epsilon: 0.0,
            relaxation_sweeps: 200,
            memory: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub state: VariationalState,
    pub energy: f64,
    /// `⟨σ_z⟩` per spin.
    pub sigma_z: Vec<f64>,
    /// `⟨σ_x⟩` per spin.
    pub sigma_x: Vec<f64>,
    pub converged: bool,
    /// Restarts that reached the convergence criteria.
    pub restarts_used: usize,
    /// Number of initial states tried.
    pub best_of: usize,
    pub grad_max: f64,
    pub iterations: usize,
}

/// Outcome of a single local optimization.
#[derive(Debug, Clone)]
pub struct LocalResult {
    pub state: VariationalState,
    pub energy: f64,
    pub grad_max: f64,
    pub converged: bool,
    pub iterations: usize,
}

// ---------------------------------------------------------------------------
// weights: generalized eigenproblem

/// Lowest generalized eigenpair of `(H, S)` via canonical orthogonalization.
/// Returns `None` if the overlap matrix is numerically zero.
fn lowest_weights(h: &[f64], s: &[f64], k: usize) -> Option<(f64, Vec<f64>)> {
    let smat = DMatrix::from_row_slice(k, k, s);
    let eig = SymmetricEigen::new(smat);
    let smax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(smax > 0.0) {
        return None;
    }
    let keep: Vec<usize> = (0..k).filter(|&a| eig.eigenvalues[a] > 1e-12 * smax).collect();
    let r = keep.len();
    let mut x = DMatrix::zeros(k, r);
    for (col, &a) in keep.iter().enumerate() {
        let scale = 1.0 / eig.eigenvalues[a].sqrt();
        for row in 0..k {
            x[(row, col)] = eig.eigenvectors[(row, a)] * scale;
        }
    }
    let hmat = DMatrix::from_row_slice(k, k, h);
    let reduced = x.transpose() * &hmat * &x;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eh = SymmetricEigen::new(reduced);
    let (idx, &e0) = eh
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))?;
    let y: DVector<f64> = eh.eigenvectors.column(idx).into_owned();
    let w = &x * y;
    Some((e0, w.iter().copied().collect()))
}

fn set_optimal_weights(model: &EnergyModel, state: &mut VariationalState) -> bool {
    let (h, s) = model.weight_matrices(state);
    match lowest_weights(&h, &s, model.n_components()) {
        Some((_, w)) => {
            state.weights_mut().copy_from_slice(&w);
            state.canonicalize().is_ok()
        }
        None => false,
    }
}

// ---------------------------------------------------------------------------
// per-mode structure shared by relaxation and preconditioner

/// Pair data needed by the per-mode linearizations.
struct PairTerm {
    i: usize,
    j: usize,
    /// `w_i w_j O_ij`.
    wwo: f64,
    /// `h_ij − E` (same configuration) or the hop amplitude.
    shifted: f64,
    /// `Some(z_c/2)` for same-configuration pairs.
    zhalf: Option<f64>,
}

fn pair_terms(spin: &SpinStructure, state: &VariationalState, omega: &[f64], lambda: &[f64], energy: f64) -> Vec<PairTerm> {
    let n = state.n_coherent();
    let w = state.weights();
    let mut out = Vec::new();
    let same = |c: usize, a: usize, b: usize, out: &mut Vec<PairTerm>| {
        let (i, j) = (c * n + a, c * n + b);
        let (ui, uj) = (state.row(i), state.row(j));
        let mut d2 = 0.0;
        let mut bath = 0.0;
        let mut coup = 0.0;
        for k in 0..ui.len() {
            d2 += (ui[k] - uj[k]) * (ui[k] - uj[k]);
            bath += omega[k] * ui[k] * uj[k];
            coup += lambda[k] * (ui[k] + uj[k]);
        }
        let h = spin.diag[c] + bath + 0.5 * spin.zsum[c] * coup;
        out.push(PairTerm {
            i,
            j,
            wwo: w[i] * w[j] * (-0.5 * d2).exp(),
            shifted: h - energy,
            zhalf: Some(0.5 * spin.zsum[c]),
        });
    };
    for c in 0..state.model().n_configs() {
        for a in 0..n {
            for b in a..n {
                same(c, a, b, &mut out);
            }
        }
    }
    for &(c, d) in &spin.links {
        for a in 0..n {
            for b in 0..n {
                let (i, j) = (c * n + a, d * n + b);
                let d2: f64 = state.row(i).iter().zip(state.row(j)).map(|(x, y)| (x - y) * (x - y)).sum();
                out.push(PairTerm { i, j, wwo: w[i] * w[j] * (-0.5 * d2).exp(), shifted: spin.hop, zhalf: None });
            }
        }
    }
    out
}

/// Per-mode `K × K` blocks of the Hessian of `𝓗 − E𝒩` with respect to the
/// displacements (weights and energy held fixed), made positive definite by
/// taking absolute eigenvalues with a floor. Stored as inverse blocks.
struct BlockPreconditioner {
    k: usize,
    inv_weights: DMatrix<f64>,
    inv_blocks: Vec<DMatrix<f64>>,
}

/// Inverse of a symmetric matrix with its eigenvalues replaced by their
/// absolute values, floored relative to the largest.
fn abs_inverse(b: DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let eig = SymmetricEigen::new(b);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = (1e-8 * scale).max(1e-14);
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        let lam = eig.eigenvalues[a].abs().max(floor);
        let v = eig.eigenvectors.column(a);
        inv += (v * v.transpose()) / lam;
    }
    inv
}

impl BlockPreconditioner {
    fn build(
        terms: &[PairTerm],
        state: &VariationalState,
        omega: &[f64],
        lambda: &[f64],
        norm: f64,
        weight_block: DMatrix<f64>,
    ) -> Self {
        let kk = state.n_components();
        let m = state.n_modes();
        let w = state.weights();
        let mut inv_blocks = Vec::with_capacity(m);
        for k in 0..m {
            let mut b = DMatrix::<f64>::zeros(kk, kk);
            for i in 0..kk {
                b[(i, i)] += 2.0 * w[i] * w[i] * omega[k];
            }
            for t in terms {
                if t.i == t.j {
                    continue;
                }
                let (ui, uj) = (state.row(t.i)[k], state.row(t.j)[k]);
                let d = uj - ui;
                let c = 2.0 * t.wwo;
                match t.zhalf {
                    Some(zh) => {
                        let f = zh * lambda[k];
                        let hp = t.shifted;
                        b[(t.i, t.i)] += c * (d * d * hp + 2.0 * d * (omega[k] * uj + f) - hp);
                        b[(t.j, t.j)] += c * (d * d * hp - 2.0 * d * (omega[k] * ui + f) - hp);
                        let off = c * (hp + omega[k]) * (1.0 - d * d);
                        b[(t.i, t.j)] += off;
                        b[(t.j, t.i)] += off;
                    }
                    None => {
                        let hop = t.shifted;
                        b[(t.i, t.i)] += c * hop * (d * d - 1.0);
                        b[(t.j, t.j)] += c * hop * (d * d - 1.0);
                        let off = c * hop * (1.0 - d * d);
                        b[(t.i, t.j)] += off;
                        b[(t.j, t.i)] += off;
                    }
                }
            }
            b /= norm;
            inv_blocks.push(abs_inverse(b));
        }
        Self { k: kk, inv_weights: abs_inverse(weight_block), inv_blocks }
    }

    /// Applies the inverse to a joint `[weights, displacements]` vector.
    fn apply(&self, g: &[f64], kk: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        let gw = DVector::from_column_slice(&g[..kk]);
        out[..kk].copy_from_slice((&self.inv_weights * gw).as_slice());
        let (gu, ou) = (&g[kk..], &mut out[kk..]);
        let mut col = DVector::<f64>::zeros(self.k);
        for (k, inv) in self.inv_blocks.iter().enumerate() {
            for i in 0..self.k {
                col[i] = gu[i * m + k];
            }
            let r = inv * &col;
            for i in 0..self.k {
                ou[i * m + k] = r[i];
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// local optimizer

/// Iterations between preconditioner rebuilds.
const PRECOND_REFRESH: usize = 10;
/// A descent whose relative energy gain over this many iterations stays below
/// `STALL_REL` is abandoned as unconverged.
const STALL_WINDOW: usize = 2000;
const STALL_REL: f64 = 1e-10;
/// Relative energy resolution below which line-search steps are judged by the gradient.
const ENERGY_NOISE: f64 = 1e-14;

struct Local<'a> {
    model: &'a EnergyModel,
    spin: SpinStructure,
    opts: &'a MinimizeOptions,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Local<'a> {
    /// Energy with the weights at their optimum for the given displacements.
    /// The state is updated in place.
    fn project(&self, state: &mut VariationalState) -> Option<f64> {
        if !set_optimal_weights(self.model, state) {
            return None;
        }
        let ev = self.model.evaluate(state).ok()?;
        ev.energy.is_finite().then_some(ev.energy)
    }

    fn preconditioner(&self, state: &VariationalState, energy: f64) -> BlockPreconditioner {
        let kk = state.n_components();
        let norm = state.norm();
        let (h, sm) = self.model.weight_matrices(state);
        let wb = DMatrix::from_fn(kk, kk, |a, b| 2.0 * (h[a * kk + b] - energy * sm[a * kk + b]) / norm);
        let terms = pair_terms(&self.spin, state, self.model.omega(), self.model.lambda(), energy);
        BlockPreconditioner::build(&terms, state, self.model.omega(), self.model.lambda(), norm, wb)
    }

    /// One damped relaxation sweep. Returns the candidate displacements.
    fn relaxation_target(&self, state: &VariationalState, energy: f64) -> Vec<f64> {
        let omega = self.model.omega();
        let lambda = self.model.lambda();
        let kk = state.n_components();
        let m = state.n_modes();
        let w = state.weights();
        let terms = pair_terms(&self.spin, state, omega, lambda, energy);
        let mut target = state.displacements().to_vec();
        for k in 0..m {
            // Row i: Σ_j w_j O_ij [(u_jk − u_ik) h'_ij + s_ij(ω_k u_jk + z λ_k / 2)] = 0,
            // multiplied through by w_i so that pair weights stay symmetric.
            let mut a = DMatrix::<f64>::zeros(kk, kk);
            let mut rhs = DVector::<f64>::zeros(kk);
            for i in 0..kk {
                a[(i, i)] += w[i] * w[i] * omega[k];
            }
            for t in &terms {
                match t.zhalf {
                    Some(zh) => {
                        let f = zh * lambda[k];
                        if t.i == t.j {
                            rhs[t.i] -= t.wwo * f;
                            continue;
                        }
                        a[(t.i, t.i)] -= t.wwo * t.shifted;
                        a[(t.j, t.j)] -= t.wwo * t.shifted;
                        a[(t.i, t.j)] += t.wwo * (t.shifted + omega[k]);
                        a[(t.j, t.i)] += t.wwo * (t.shifted + omega[k]);
                        rhs[t.i] -= t.wwo * f;
                        rhs[t.j] -= t.wwo * f;
                    }
                    None => {
                        a[(t.i, t.i)] -= t.wwo * t.shifted;
                        a[(t.j, t.j)] -= t.wwo * t.shifted;
                        a[(t.i, t.j)] += t.wwo * t.shifted;
                        a[(t.j, t.i)] += t.wwo * t.shifted;
                    }
                }
            }
            let svd = a.svd(true, true);
            if let Ok(sol) = svd.solve(&rhs, 1e-12 * svd.singular_values.max()) {
                for i in 0..kk {
                    if sol[i].is_finite() {
                        target[i * m + k] = sol[i];
                    }
                }
            }
        }
        target
    }

    fn run(&self, mut state: VariationalState) -> LocalResult {
        let m = state.n_modes();
        let opts = self.opts;
        let Some(mut energy) = self.project(&mut state) else {
            return LocalResult { energy: f64::INFINITY, grad_max: f64::INFINITY, converged: false, iterations: 0, state };
        };
        let mut iterations = 0;

        // Relaxation.
        let mut eta: f64 = 1.0;
        let mut stalls = 0;
        for _ in 0..opts.relaxation_sweeps {
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;
            let target = self.relaxation_target(&state, energy);
            let mut trial = state.clone();
            for (u, t) in trial.displacements_mut().iter_mut().zip(&target) {
                *u = (1.0 - eta) * *u + eta * t;
            }
            match self.project(&mut trial) {
                Some(e) if e <= energy => {
                    let rel = (energy - e) / energy.abs().max(1e-300);
                    state = trial;
                    energy = e;
                    eta = (eta * 1.5).min(1.0);
                    if rel < 1e-10 {
                        stalls += 1;
                        if stalls >= 3 {
                            break;
                        }
                    } else {
                        stalls = 0;
                    }
                }
                _ => {
                    eta *= 0.5;
                    if eta < 0.05 {
                        break;
                    }
                }
            }
        }

        // Quasi-Newton descent on weights and displacements jointly.
        let _ = state.canonicalize();
        let (mut energy, mut grad) = match self.model.evaluate_with_gradient(&state) {
            Ok((ev, g)) if ev.energy.is_finite() => (ev.energy, g),
            _ => return LocalResult { energy, grad_max: f64::INFINITY, converged: false, iterations, state },
        };
        let kk = state.n_components();
        let flat = |g: &StateGradient| -> Vec<f64> { g.weights.iter().chain(&g.displacements).copied().collect() };
        let mut s_hist: VecDeque<Vec<f64>> = VecDeque::new();
        let mut y_hist: VecDeque<Vec<f64>> = VecDeque::new();
        let mut small_steps = 0;
        let mut converged = false;
        let mut fresh_failures = 0;
        let mut precond = self.preconditioner(&state, energy);
        let mut precond_age = 0;
        let mut window_start = (iterations, energy);
        while iterations < opts.max_iter {
            iterations += 1;
            if iterations - window_start.0 >= STALL_WINDOW {
                if (window_start.1 - energy) <= STALL_REL * energy.abs() {
                    break;
                }
                window_start = (iterations, energy);
            }
            let g = flat(&grad);
            if precond_age >= PRECOND_REFRESH || s_hist.is_empty() {
                precond = self.preconditioner(&state, energy);
                precond_age = 0;
            }
            precond_age += 1;

            let mut q = g.clone();
            let mut alphas = Vec::with_capacity(s_hist.len());
            for (s, y) in s_hist.iter().zip(&y_hist).rev() {
                let rho = 1.0 / dot(y, s);
                let a = rho * dot(s, &q);
                for (qi, yi) in q.iter_mut().zip(y) {
                    *qi -= a * yi;
                }
                alphas.push((a, rho));
            }
            let mut r = precond.apply(&q, kk, m);
            for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
                let b = rho * dot(y, &r);
                for (ri, si) in r.iter_mut().zip(s) {
                    *ri += (a - b) * si;
                }
            }
            let mut dir: Vec<f64> = r.iter().map(|x| -x).collect();
            let mut slope = dot(&dir, &g);
            if !(slope < 0.0) {
                s_hist.clear();
                y_hist.clear();
                dir = precond.apply(&g, kk, m).iter().map(|x| -x).collect();
                slope = dot(&dir, &g);
                if !(slope < 0.0) {
                    dir = g.iter().map(|x| -x).collect();
                    slope = dot(&dir, &g);
                }
            }

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..50 {
                let mut trial = state.clone();
                for (p, d) in trial.weights_mut().iter_mut().zip(&dir[..kk]) {
                    *p += step * d;
                }
                for (p, d) in trial.displacements_mut().iter_mut().zip(&dir[kk..]) {
                    *p += step * d;
                }
                if let Ok((ev, g_new)) = self.model.evaluate_with_gradient(&trial) {
                    let sufficient = ev.energy <= energy + 1e-4 * step * slope;
                    // once energy changes drown in rounding, accept on a shrinking gradient
                    let within_noise = (ev.energy - energy).abs() <= ENERGY_NOISE * energy.abs()
                        && g_new.max_abs() < grad.max_abs();
                    if ev.energy.is_finite() && (sufficient || within_noise) {
                        accepted = Some((trial, ev.energy, g_new));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((trial, e_new, g_new)) = accepted else {
                if s_hist.is_empty() {
                    fresh_failures += 1;
                } else {
                    fresh_failures = 0;
                }
                s_hist.clear();
                y_hist.clear();
                if fresh_failures >= 2 {
                    break;
                }
                continue;
            };
            let gn = flat(&g_new);
            let s_vec: Vec<f64> = trial
                .weights()
                .iter()
                .chain(trial.displacements())
                .zip(state.weights().iter().chain(state.displacements()))
                .map(|(a, b)| a - b)
                .collect();
            let y_vec: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s_vec, &y_vec);
            if sy > 1e-12 * dot(&s_vec, &s_vec).sqrt() * dot(&y_vec, &y_vec).sqrt() {
                s_hist.push_back(s_vec);
                y_hist.push_back(y_vec);
                if s_hist.len() > opts.memory {
                    s_hist.pop_front();
                    y_hist.pop_front();
                }
            }
            let rel = (energy - e_new).abs() / energy.abs().max(1e-300);
            state = trial;
            energy = e_new;
            grad = g_new;
            let norm = state.norm();
            if (norm - 1.0).abs() > 0.25 {
                let _ = state.canonicalize();
                if let Ok((ev, g2)) = self.model.evaluate_with_gradient(&state) {
                    energy = ev.energy;
                    grad = g2;
                }
                s_hist.clear();
                y_hist.clear();
            }
            if rel < opts.energy_tol && grad.max_abs() < opts.grad_tol {
                small_steps += 1;
                if small_steps >= 2 {
                    converged = true;
                    break;
                }
            } else {
                small_steps = 0;
            }
        }
        let _ = state.canonicalize();
        if let Ok((ev, g2)) = self.model.evaluate_with_gradient(&state) {
            energy = ev.energy;
            grad = g2;
        }
        if !converged && grad.max_abs() < opts.grad_tol {
            converged = true;
        }
        let grad_max = grad.max_abs();
        LocalResult { state, energy, grad_max, converged, iterations }
    }
}

/// Random initial state: weights uniform in `[−1, 1]`, displacements
/// `ξ · (−λ_k / 2ω_k)` with `ξ` uniform in `[−1.5, 1.5]` per entry.
pub fn random_initial_state(model: SpinModel, params: &ModelParams, n: usize, rng: &mut impl Rng) -> VariationalState {
    let m = params.n_modes();
    let mut st = VariationalState::zeros(model, n, m);
    for w in st.weights_mut() {
        *w = rng.gen_range(-1.0..=1.0);
    }
    let classical: Vec<f64> = params.bath.modes.iter().map(|md| -md.lambda / (2.0 * md.omega)).collect();
    for i in 0..st.n_components() {
        for (u, c) in st.row_mut(i).iter_mut().zip(&classical) {
            *u = rng.gen_range(-1.5..=1.5) * c;
        }
    }
    st
}

/// Physically structured initial state: component displacements interpolate
/// between the classical displacement of their own configuration at high
/// frequency and a shared displacement `m · (−λ_k / 2ω_k)` at low frequency,
/// with a random crossover scale. The noise added per entry is bounded by one
/// so that components keep finite mutual overlaps.
pub fn structured_initial_state(model: SpinModel, params: &ModelParams, n: usize, rng: &mut impl Rng) -> VariationalState {
    let m = params.n_modes();
    let mut st = VariationalState::zeros(model, n, m);
    for w in st.weights_mut() {
        *w = rng.gen_range(-1.0..=1.0);
    }
    let scale = params.delta.max(1e-6 * params.bath.spec.omega_c);
    let crossover = scale * 10f64.powf(rng.gen_range(-3.0..=0.5));
    let spins = model.n_spins() as f64;
    let magnet: f64 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(-spins..=spins) };
    for i in 0..st.n_components() {
        let c = i / n;
        let z: f64 = (0..model.n_spins()).map(|sp| model.sigma_z(c, sp)).sum();
        let jitter = rng.gen_range(0.0..=0.5);
        let row: Vec<f64> = params
            .bath
            .modes
            .iter()
            .map(|md| {
                let hi = md.omega / (md.omega + crossover);
                let base = -md.lambda / (2.0 * md.omega) * (z * hi + magnet * (1.0 - hi));
                base + jitter * base.abs().min(1.0) * rng.gen_range(-1.0..=1.0)
            })
            .collect();
        st.row_mut(i).copy_from_slice(&row);
    }
    st
}

/// Seed of restart `index` derived from a master seed.
pub fn restart_seed(master: u64, index: usize) -> u64 {
    // SplitMix64 finalizer over (master, index).
    let mut z = master ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Local optimization from a given starting state.
pub fn local_minimize(start: VariationalState, params: &ModelParams, opts: &MinimizeOptions) -> Result<LocalResult> {
    let search = search_params(params, opts);
    let model = EnergyModel::new(&start, &search)?;
    let local = Local { model: &model, spin: SpinStructure::new(start.model(), &search), opts };
    let mut res = local.run(start);
    if opts.bias_epsilon != 0.0 {
        finalize_unbiased(&mut res, params, opts)?;
    }
    Ok(res)
}

fn search_params(params: &ModelParams, opts: &MinimizeOptions) -> ModelParams {
    let mut p = params.clone();
    p.epsilon += opts.bias_epsilon;
    p
}

fn finalize_unbiased(res: &mut LocalResult, params: &ModelParams, opts: &MinimizeOptions) -> Result<()> {
    let model = EnergyModel::new(&res.state, params)?;
    let (ev, g) = model.evaluate_with_gradient(&res.state)?;
    res.energy = ev.energy;
    res.grad_max = g.max_abs();
    let _ = opts;
    Ok(())
}

/// Multi-start minimization: `restarts` random initial states (plus an optional
/// warm start) are relaxed independently and the lowest converged energy wins.
pub fn minimize(
    model: SpinModel,
    params: &ModelParams,
    opts: &MinimizeOptions,
    warm_start: Option<&VariationalState>,
) -> Result<GroundStateResult> {
    if opts.n_coherent == 0 {
        return Err(SbmError::Config("n_coherent must be positive".into()));
    }
    let search = search_params(params, opts);
    let probe = VariationalState::zeros(model, opts.n_coherent, params.n_modes());
    let energy_model = EnergyModel::new(&probe, &search)?;
    let spin = SpinStructure::new(model, &search);
    let local = Local { model: &energy_model, spin, opts };

    let mut starts: Vec<VariationalState> = Vec::new();
    if let Some(ws) = warm_start {
        if ws.model() != model || ws.n_modes() != params.n_modes() || ws.n_coherent() != opts.n_coherent {
            return Err(SbmError::Config("warm start does not match model, modes or n_coherent".into()));
        }
        starts.push(ws.clone());
    }
    let restarts = opts.restarts.max(1);
    let results: Vec<LocalResult> = (0..restarts + starts.len())
        .into_par_iter()
        .map(|idx| {
            let start = if idx < starts.len() {
                starts[idx].clone()
            } else {
                let r = idx - starts.len();
                let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts.seed, r));
                if r % 2 == 0 {
                    random_initial_state(model, &search, opts.n_coherent, &mut rng)
                } else {
                    structured_initial_state(model, &search, opts.n_coherent, &mut rng)
                }
            };
            local.run(start)
        })
        .collect();

    let n_converged = results.iter().filter(|r| r.converged).count();
    let best_idx = |only_converged: bool| {
        results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.energy.is_finite() && (!only_converged || r.converged))
            .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    };
    let (idx, converged) = match best_idx(true) {
        Some(i) => (i, true),
        None => match best_idx(false) {
            Some(i) => (i, false),
            None => return Err(SbmError::DegenerateNorm(0.0)),
        },
    };
    let best = &results[idx];
    let final_model = EnergyModel::new(&best.state, params)?;
    let mut state = best.state.clone();
    state.canonicalize()?;
    let (ev, g) = final_model.evaluate_with_gradient(&state)?;
    let result = GroundStateResult {
        sigma_z: state.sigma_z()?,
        sigma_x: state.sigma_x()?,
        state,
        energy: ev.energy,
        converged,
        restarts_used: n_converged,
        best_of: results.len(),
        grad_max: g.max_abs(),
        iterations: best.iterations,
    };
    if converged {
        Ok(result)
    } else {
        Err(SbmError::NonConvergence { best: Box::new(result) })
    }
}

/// Finite-difference derivative of `values` on a sorted grid: central differences
/// inside (second order on non-uniform grids), one-sided at the two ends.
pub fn energy_derivative(alphas: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = alphas.len();
    if values.len() != n {
        return Err(SbmError::LengthMismatch { expected: n, got: values.len() });
    }
    if n < 3 {
        return Err(SbmError::Config(format!("derivative needs at least 3 grid points, got {n}")));
    }
    if alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SbmError::Config("grid must be strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(n);
    out.push((values[1] - values[0]) / (alphas[1] - alphas[0]));
    for i in 1..n - 1 {
        let h0 = alphas[i] - alphas[i - 1];
        let h1 = alphas[i + 1] - alphas[i];
        let d = (h0 * h0 * (values[i + 1] - values[i]) + h1 * h1 * (values[i] - values[i - 1])) / (h0 * h1 * (h0 + h1));
        out.push(d);
    }
    out.push((values[n - 1] - values[n - 2]) / (alphas[n - 1] - alphas[n - 2]));
    Ok(out)
}
