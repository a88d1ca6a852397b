//! Run configuration: a TOML file merged with command-line overrides and
//! resolved into validated model and search settings.

use std::path::{Path, PathBuf};

use sbm_core::criticality::SweepConfig;
use sbm_core::spin::DiscordOptions;
use sbm_core::{BathSpec, MinimizeOptions, SpinModel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every key is optional; flags fill in or override file values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub s: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    pub omega_c: Option<f64>,
    pub m: Option<usize>,
    pub omega_min: Option<f64>,
    pub n: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub grad_tol: Option<f64>,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub alpha_start: Option<f64>,
    pub alpha_stop: Option<f64>,
    pub alpha_step: Option<f64>,
    pub warm_start: Option<bool>,
    pub refine: Option<bool>,
    pub refine_factor: Option<usize>,
    pub refine_column: Option<String>,
    pub reference_mode: Option<usize>,
    pub indicators: Option<Vec<String>>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Values set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            model, s, delta, epsilon, k, lambda, omega_c, m, omega_min, n, restarts, seed, max_iter, grad_tol, alpha, alphas, alpha_start, alpha_stop,
            alpha_step, warm_start, refine, refine_factor, refine_column, reference_mode, indicators, out
        );
        self
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let missing = |key: &str| CliError::Config(format!("missing required setting '{key}'"));
        let model: SpinModel = self.model.as_deref().unwrap_or("single").parse().map_err(|e: sbm_core::SbmError| CliError::Config(e.to_string()))?;
        let s = self.s.ok_or_else(|| missing("s"))?;
        let delta = self.delta.ok_or_else(|| missing("delta"))?;
        let lambda = self.lambda.ok_or_else(|| missing("lambda"))?;
        let omega_c = self.omega_c.unwrap_or(1.0);
        let seed = self.seed.ok_or_else(|| missing("seed"))?;
        let bath = match (self.m, self.omega_min) {
            (Some(m), None) => BathSpec::new(s, 0.0, omega_c, lambda, m),
            (None, Some(w)) => BathSpec::from_omega_min(s, 0.0, omega_c, lambda, w),
            (Some(_), Some(_)) => return Err(CliError::Config("set either 'm' or 'omega_min', not both".into())),
            (None, None) => return Err(missing("m or omega_min")),
        }
        .map_err(CliError::from_core)?;
        let n = self.n.unwrap_or(4);
        let restarts = self.restarts.unwrap_or(50);
        if n == 0 || restarts == 0 {
            return Err(CliError::Config("'n' and 'restarts' must be positive".into()));
        }
        let grid = self.grid()?;
        let defaults = MinimizeOptions::default();
        let resolved = Resolved {
            model,
            s,
            delta,
            epsilon: self.epsilon.unwrap_or(0.0),
            k: self.k.unwrap_or(0.0),
            lambda,
            omega_c,
            m: bath.m,
            omega_min: bath.omega_min(),
            n,
            restarts,
            seed,
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            grad_tol: self.grad_tol.unwrap_or(defaults.grad_tol),
            alpha: self.alpha,
            alphas: grid,
            warm_start: self.warm_start.unwrap_or(false),
            refine: self.refine.unwrap_or(false),
            refine_factor: self.refine_factor.unwrap_or(5),
            refine_column: self.refine_column.clone().unwrap_or_else(|| "SumD_b".into()),
            reference_mode: self.reference_mode,
            indicators: self.indicators.clone().unwrap_or_default(),
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        };
        if let Some(r) = resolved.reference_mode {
            if r >= resolved.m {
                return Err(CliError::Config(format!("reference_mode {r} out of range for {} modes", resolved.m)));
            }
        }
        Ok(resolved)
    }

    fn grid(&self) -> Result<Vec<f64>, CliError> {
        if let Some(list) = &self.alphas {
            return Ok(list.clone());
        }
        match (self.alpha_start, self.alpha_stop, self.alpha_step) {
            (Some(a), Some(b), Some(h)) => {
                if !(h > 0.0) || !(b >= a) {
                    return Err(CliError::Config("alpha grid needs alpha_step > 0 and alpha_stop >= alpha_start".into()));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                Ok((0..=n).map(|i| a + h * i as f64).collect())
            }
            (None, None, None) => Ok(Vec::new()),
            _ => Err(CliError::Config("alpha grid needs alpha_start, alpha_stop and alpha_step".into())),
        }
    }
}

/// Fully resolved settings; serialized into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub model: SpinModel,
    pub s: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub k: f64,
    pub lambda: f64,
    pub omega_c: f64,
    pub m: usize,
    pub omega_min: f64,
    pub n: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub alphas: Vec<f64>,
    pub warm_start: bool,
    pub refine: bool,
    pub refine_factor: usize,
    pub refine_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_mode: Option<usize>,
    pub indicators: Vec<String>,
    /// Output location only; left out of headers so outputs do not depend on it.
    #[serde(skip)]
    pub out: PathBuf,
}

impl Resolved {
    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            model: self.model,
            epsilon: self.epsilon,
            delta: self.delta,
            k_ising: self.k,
            bath: BathSpec { s: self.s, alpha: 0.0, omega_c: self.omega_c, lambda: self.lambda, m: self.m },
            minimize: MinimizeOptions {
                n_coherent: self.n,
                restarts: self.restarts,
                seed: self.seed,
                max_iter: self.max_iter,
                grad_tol: self.grad_tol,
                ..Default::default()
            },
            warm_start: self.warm_start,
            reference_mode: self.reference_mode,
            discord: DiscordOptions::default(),
        }
    }

    pub fn single_alpha(&self) -> Result<f64, CliError> {
        self.alpha.ok_or_else(|| CliError::Config("missing required setting 'alpha'".into()))
    }
}

/// `# `-prefixed TOML rendering of a serializable settings block.
pub fn header<T: Serialize>(command: &str, settings: &T) -> Result<String, CliError> {
    let body = toml::to_string(settings).map_err(|e| CliError::Other(e.into()))?;
    let mut out = format!("# sbm {} {command}\n", env!("CARGO_PKG_VERSION"));
    for line in body.lines().filter(|l| !l.is_empty()) {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    Ok(out)
}
