//! α-sweeps: one variational ground state and its indicators per coupling.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{ModelParams, SpinModel, VariationalState};
use crate::bath::{discretize, BathSpec};
use crate::criticality::signature::{locate_transition, Signature};
use crate::error::{Result, SbmError};
use crate::io::StateDocument;
use crate::observables::{pair_sweep, summed_indicators, SummedIndicators};
use crate::optimize::{energy_derivative, minimize, restart_seed, GroundStateResult, MinimizeOptions};
use crate::spin::{reduced_density, DiscordOptions, SpinMeasures};

/// Everything that defines a sweep except the coupling grid. `bath.alpha` is
/// overwritten at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: SpinModel,
    pub epsilon: f64,
    pub delta: f64,
    pub k_ising: f64,
    pub bath: BathSpec,
    pub minimize: MinimizeOptions,
    /// Seed each point with the converged state of its left neighbour. Forces
    /// sequential execution.
    pub warm_start: bool,
    /// Reference mode of the bath pair sweep; defaults to the highest-frequency mode.
    pub reference_mode: Option<usize>,
    pub discord: DiscordOptions,
}

impl SweepConfig {
    pub fn params(&self, alpha: f64) -> Result<ModelParams> {
        let spec = self.bath.with_alpha(alpha);
        spec.validate()?;
        ModelParams::new(self.epsilon, self.delta, self.k_ising, discretize(&spec)?)
    }

    /// Search options at one grid point. The seed depends only on the master
    /// seed and α, so a point gives the same result inside a sweep and alone.
    fn point_options(&self, alpha: f64) -> MinimizeOptions {
        let mut opts = self.minimize.clone();
        opts.seed = restart_seed(self.minimize.seed, alpha.to_bits() as usize);
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub energy: f64,
    /// Filled in once the whole grid is known (needs at least 3 points).
    pub de_dalpha: Option<f64>,
    pub sigma_z: Vec<f64>,
    pub sigma_x: Vec<f64>,
    pub indicators: SummedIndicators,
    /// Two-spin runs only.
    pub spin: Option<SpinMeasures>,
    pub converged: bool,
    pub restarts_used: usize,
    pub best_of: usize,
    pub grad_max: f64,
}

/// Records together with the ground states they were computed from.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub states: Vec<GroundStateResult>,
}

impl Sweep {
    pub fn alphas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.alpha).collect()
    }

    /// One column of the record table by name (see [`record_columns`]).
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        column(&self.records, name)
    }
}

/// Ground state and indicators at a single coupling.
pub fn evaluate_point(
    cfg: &SweepConfig,
    alpha: f64,
    warm: Option<&VariationalState>,
) -> Result<(SweepRecord, GroundStateResult)> {
    let params = cfg.params(alpha)?;
    let result = match minimize(cfg.model, &params, &cfg.point_options(alpha), warm) {
        Ok(r) => r,
        Err(SbmError::NonConvergence { best }) => {
            log::warn!("alpha = {alpha}: no restart converged, keeping best partial result");
            *best
        }
        Err(e) => return Err(e),
    };
    let record = record_from_result(cfg, &params, alpha, &result)?;
    Ok((record, result))
}

fn record_from_result(cfg: &SweepConfig, params: &ModelParams, alpha: f64, result: &GroundStateResult) -> Result<SweepRecord> {
    let pairs = pair_sweep(&result.state, &params.bath, cfg.reference_mode)?;
    let spin = match cfg.model {
        SpinModel::Two => Some(SpinMeasures::evaluate(&reduced_density(&result.state)?, &cfg.discord)?),
        SpinModel::Single => None,
    };
    Ok(SweepRecord {
        alpha,
        energy: result.energy,
        de_dalpha: None,
        sigma_z: result.sigma_z.clone(),
        sigma_x: result.sigma_x.clone(),
        indicators: summed_indicators(&pairs),
        spin,
        converged: result.converged,
        restarts_used: result.restarts_used,
        best_of: result.best_of,
        grad_max: result.grad_max,
    })
}

/// Rescales a converged state to a new coupling: displacements scale with the
/// couplings `λ_k ∝ √α`.
fn warm_state(prev: &GroundStateResult, alpha_prev: f64, alpha: f64) -> VariationalState {
    let mut state = prev.state.clone();
    if alpha_prev > 0.0 && alpha > 0.0 {
        let scale = (alpha / alpha_prev).sqrt();
        for u in state.displacements_mut() {
            *u *= scale;
        }
    }
    state
}

fn checkpoint_path(dir: &Path, alpha: f64) -> PathBuf {
    dir.join(format!("state_alpha_{alpha:.12e}.json"))
}

fn load_checkpoint(dir: &Path, cfg: &SweepConfig, alpha: f64, params: &ModelParams) -> Option<GroundStateResult> {
    let path = checkpoint_path(dir, alpha);
    if !path.exists() {
        return None;
    }
    match StateDocument::load(&path) {
        Ok(doc) if doc.params == *params && doc.weights.first().map(Vec::len) == Some(cfg.minimize.n_coherent) => {
            log::info!("alpha = {alpha}: resumed from {}", path.display());
            doc.result().ok()
        }
        Ok(_) => {
            log::warn!("ignoring checkpoint {} with different parameters", path.display());
            None
        }
        Err(e) => {
            log::warn!("ignoring unreadable checkpoint {}: {e}", path.display());
            None
        }
    }
}

/// Runs one ground-state search per coupling. Non-converged points are kept
/// and flagged. With a checkpoint directory every converged state is written
/// as JSON and existing matching files are reused instead of recomputed.
pub fn run_sweep(cfg: &SweepConfig, alphas: &[f64], checkpoint: Option<&Path>) -> Result<Sweep> {
    if alphas.is_empty() {
        return Err(SbmError::Config("empty coupling grid".into()));
    }
    if alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SbmError::Config("coupling grid must be strictly increasing".into()));
    }
    if let Some(dir) = checkpoint {
        fs::create_dir_all(dir)?;
    }

    let solve = |alpha: f64, warm: Option<&VariationalState>| -> Result<(SweepRecord, GroundStateResult)> {
        let params = cfg.params(alpha)?;
        if let Some(dir) = checkpoint {
            if let Some(res) = load_checkpoint(dir, cfg, alpha, &params) {
                let record = record_from_result(cfg, &params, alpha, &res)?;
                return Ok((record, res));
            }
        }
        let (record, res) = evaluate_point(cfg, alpha, warm)?;
        if let Some(dir) = checkpoint {
            StateDocument::new(&res, &params).save(&checkpoint_path(dir, alpha))?;
        }
        log::info!(
            "alpha = {alpha}: E = {:.12}, sigma_z = {:?}, converged {}/{}",
            record.energy,
            record.sigma_z,
            record.restarts_used,
            record.best_of
        );
        Ok((record, res))
    };

    let points: Vec<(SweepRecord, GroundStateResult)> = if cfg.warm_start {
        let mut out: Vec<(SweepRecord, GroundStateResult)> = Vec::with_capacity(alphas.len());
        for (i, &alpha) in alphas.iter().enumerate() {
            let warm = if i > 0 { Some(warm_state(&out[i - 1].1, alphas[i - 1], alpha)) } else { None };
            out.push(solve(alpha, warm.as_ref())?);
        }
        out
    } else {
        alphas.par_iter().map(|&a| solve(a, None)).collect::<Result<_>>()?
    };

    let (mut records, states): (Vec<_>, Vec<_>) = points.into_iter().unzip();
    fill_derivative(&mut records);
    Ok(Sweep { records, states })
}

/// Second pass of a two-pass sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    /// Record column whose signature gives the provisional transition.
    pub column: String,
    pub signature: Signature,
    /// Ratio of coarse to fine grid spacing.
    pub factor: usize,
    /// Half width of the refined interval in coarse steps.
    pub half_width: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Self { column: "SumD_b".into(), signature: Signature::Peak, factor: 5, half_width: 2 }
    }
}

/// Coarse sweep followed by a `factor`-times finer grid around the provisional
/// transition. If no transition is found on the coarse grid, the coarse sweep
/// is returned as is.
pub fn run_refined_sweep(cfg: &SweepConfig, coarse: &[f64], refine: &Refinement, checkpoint: Option<&Path>) -> Result<Sweep> {
    if refine.factor < 2 {
        return Err(SbmError::Config("refinement factor must be at least 2".into()));
    }
    let first = run_sweep(cfg, coarse, checkpoint)?;
    let values = first.column(&refine.column)?;
    let provisional = match locate_transition(coarse, &values, refine.signature) {
        Ok(t) => t.alpha_c,
        Err(SbmError::NotFound(why)) => {
            log::warn!("no provisional transition on the coarse grid ({why}); skipping refinement");
            return Ok(first);
        }
        Err(e) => return Err(e),
    };
    let i = coarse.partition_point(|&a| a < provisional).min(coarse.len() - 1);
    let lo = i.saturating_sub(refine.half_width);
    let hi = (i + refine.half_width).min(coarse.len() - 1);
    let mut fine = Vec::new();
    for j in lo..hi {
        let h = (coarse[j + 1] - coarse[j]) / refine.factor as f64;
        for s in 1..refine.factor {
            fine.push(coarse[j] + h * s as f64);
        }
    }
    log::info!("refining around alpha = {provisional} with {} extra points", fine.len());
    let second = run_sweep(cfg, &fine, checkpoint)?;
    let mut merged: Vec<(SweepRecord, GroundStateResult)> =
        first.records.into_iter().zip(first.states).chain(second.records.into_iter().zip(second.states)).collect();
    merged.sort_by(|a, b| a.0.alpha.total_cmp(&b.0.alpha));
    let (mut records, states): (Vec<_>, Vec<_>) = merged.into_iter().unzip();
    fill_derivative(&mut records);
    Ok(Sweep { records, states })
}

/// Sets `de_dalpha` from finite differences of the energies when the grid has
/// at least three points.
pub fn fill_derivative(records: &mut [SweepRecord]) {
    let alphas: Vec<f64> = records.iter().map(|r| r.alpha).collect();
    let energies: Vec<f64> = records.iter().map(|r| r.energy).collect();
    if let Ok(d) = energy_derivative(&alphas, &energies) {
        for (r, v) in records.iter_mut().zip(d) {
            r.de_dalpha = Some(v);
        }
    }
}

/// `(α, ∂E_g/∂α)` on a sorted grid of at least three couplings.
pub fn ground_state_energy_derivative(cfg: &SweepConfig, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if alphas.len() < 3 {
        return Err(SbmError::Config(format!("derivative needs at least 3 grid points, got {}", alphas.len())));
    }
    let sweep = run_sweep(cfg, alphas, None)?;
    let energies: Vec<f64> = sweep.records.iter().map(|r| r.energy).collect();
    let d = energy_derivative(alphas, &energies)?;
    Ok(alphas.iter().copied().zip(d).collect())
}

// ---------------------------------------------------------------------------
// CSV

const SPIN_COLUMNS: [&str; 10] = ["S_vN", "S_L", "zz", "I_spin", "C", "E_F", "N_neg", "E_N_spin", "D", "J"];

/// Column names of the record table for a model.
pub fn record_columns(model: SpinModel) -> Vec<String> {
    let mut cols: Vec<String> = vec!["alpha".into(), "E_g".into(), "dEg_dalpha".into()];
    for s in 1..=model.n_spins() {
        cols.push(format!("sigma_z_{s}"));
    }
    for s in 1..=model.n_spins() {
        cols.push(format!("sigma_x_{s}"));
    }
    for c in ["SumCorX", "SumS_b", "SumI_b", "SumS_L", "SumE_N", "SumD_b", "unphysical_pairs"] {
        cols.push(c.into());
    }
    if model == SpinModel::Two {
        cols.extend(SPIN_COLUMNS.iter().map(|s| s.to_string()));
    }
    for c in ["converged", "restarts_used", "best_of", "grad_max"] {
        cols.push(c.into());
    }
    cols
}

fn record_values(r: &SweepRecord) -> Vec<f64> {
    let ind = &r.indicators;
    let mut v = vec![r.alpha, r.energy, r.de_dalpha.unwrap_or(f64::NAN)];
    v.extend(&r.sigma_z);
    v.extend(&r.sigma_x);
    v.extend([
        ind.cor_x,
        ind.entropy,
        ind.mutual_information,
        ind.linear_entropy,
        ind.log_negativity,
        ind.discord,
        ind.unphysical_pairs as f64,
    ]);
    if let Some(s) = &r.spin {
        v.extend([
            s.entropy,
            s.linear_entropy,
            s.zz_correlation,
            s.mutual_information,
            s.concurrence,
            s.entanglement_of_formation,
            s.negativity,
            s.log_negativity,
            s.discord,
            s.classical,
        ]);
    }
    v.extend([f64::from(u8::from(r.converged)), r.restarts_used as f64, r.best_of as f64, r.grad_max]);
    v
}

/// Values of one named column (see [`record_columns`]).
pub fn column(records: &[SweepRecord], name: &str) -> Result<Vec<f64>> {
    let model = match records.first() {
        Some(r) if r.spin.is_some() => SpinModel::Two,
        Some(_) => SpinModel::Single,
        None => return Ok(Vec::new()),
    };
    let idx = record_columns(model)
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| SbmError::Config(format!("unknown column '{name}'")))?;
    Ok(records.iter().map(|r| record_values(r)[idx]).collect())
}

/// CSV table of the records, one row per α. Numbers use a fixed format so that
/// identical runs produce identical files.
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let model = if records.iter().any(|r| r.spin.is_some()) { SpinModel::Two } else { SpinModel::Single };
    let mut out = record_columns(model).join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = record_values(r).iter().map(|v| format!("{v:.15e}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Parses a table written by [`records_to_csv`]. Lines starting with `#` are
/// ignored.
pub fn records_from_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| SbmError::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let model = if headers.iter().any(|h| h == "sigma_z_2") { SpinModel::Two } else { SpinModel::Single };
    let expected = record_columns(model);
    for c in &expected {
        if !headers.contains(c) {
            return Err(SbmError::Parse(format!("missing column '{c}'")));
        }
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| SbmError::Parse(e.to_string()))?;
        let mut map: HashMap<&str, f64> = HashMap::new();
        for (h, v) in headers.iter().zip(row.iter()) {
            let x: f64 = v.parse().map_err(|_| SbmError::Parse(format!("bad number '{v}' in column '{h}'")))?;
            map.insert(h.as_str(), x);
        }
        let get = |k: &str| map[k];
        let spins = model.n_spins();
        let spin = (model == SpinModel::Two).then(|| SpinMeasures {
            entropy: get("S_vN"),
            linear_entropy: get("S_L"),
            zz_correlation: get("zz"),
            mutual_information: get("I_spin"),
            concurrence: get("C"),
            entanglement_of_formation: get("E_F"),
            negativity: get("N_neg"),
            log_negativity: get("E_N_spin"),
            discord: get("D"),
            classical: get("J"),
        });
        let d = get("dEg_dalpha");
        records.push(SweepRecord {
            alpha: get("alpha"),
            energy: get("E_g"),
            de_dalpha: d.is_finite().then_some(d),
            sigma_z: (1..=spins).map(|s| get(&format!("sigma_z_{s}"))).collect(),
            sigma_x: (1..=spins).map(|s| get(&format!("sigma_x_{s}"))).collect(),
            indicators: SummedIndicators {
                cor_x: get("SumCorX"),
                entropy: get("SumS_b"),
                mutual_information: get("SumI_b"),
                linear_entropy: get("SumS_L"),
                log_negativity: get("SumE_N"),
                discord: get("SumD_b"),
                unphysical_pairs: get("unphysical_pairs") as usize,
            },
            spin,
            converged: get("converged") != 0.0,
            restarts_used: get("restarts_used") as usize,
            best_of: get("best_of") as usize,
            grad_max: get("grad_max"),
        });
    }
    Ok(records)
}
