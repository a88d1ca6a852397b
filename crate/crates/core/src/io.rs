//! JSON documents for converged states, used for checkpoints and warm starts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::{ModelParams, SpinModel, VariationalState};
use crate::error::{Result, SbmError};
use crate::optimize::GroundStateResult;

pub const STATE_FORMAT: &str = "sbm-state/1";

/// Serialized ground state. Weights and displacement matrices are stored per spin
/// configuration so that the document is readable without knowing the internal layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub version: String,
    pub model: SpinModel,
    pub params: ModelParams,
    pub configs: Vec<String>,
    /// `weights[c][n]`.
    pub weights: Vec<Vec<f64>>,
    /// `displacements[c][n][k]`.
    pub displacements: Vec<Vec<Vec<f64>>>,
    pub energy: f64,
    pub sigma_z: Vec<f64>,
    pub sigma_x: Vec<f64>,
    pub converged: bool,
    pub restarts_used: usize,
    pub best_of: usize,
    pub grad_max: f64,
}

impl StateDocument {
    pub fn new(result: &GroundStateResult, params: &ModelParams) -> Self {
        let state = &result.state;
        let model = state.model();
        let nc = model.n_configs();
        Self {
            version: STATE_FORMAT.to_string(),
            model,
            params: params.clone(),
            configs: model.config_labels().iter().map(|s| s.to_string()).collect(),
            weights: (0..nc).map(|c| state.config_weights(c).to_vec()).collect(),
            displacements: (0..nc).map(|c| state.config_rows(c)).collect(),
            energy: result.energy,
            sigma_z: result.sigma_z.clone(),
            sigma_x: result.sigma_x.clone(),
            converged: result.converged,
            restarts_used: result.restarts_used,
            best_of: result.best_of,
            grad_max: result.grad_max,
        }
    }

    pub fn state(&self) -> Result<VariationalState> {
        if self.version != STATE_FORMAT {
            return Err(SbmError::Parse(format!("unsupported state format '{}'", self.version)));
        }
        let state = VariationalState::from_parts(self.model, &self.weights, &self.displacements)?;
        state.check_compatible(&self.params)?;
        Ok(state)
    }

    pub fn result(&self) -> Result<GroundStateResult> {
        Ok(GroundStateResult {
            state: self.state()?,
            energy: self.energy,
            sigma_z: self.sigma_z.clone(),
            sigma_x: self.sigma_x.clone(),
            converged: self.converged,
            restarts_used: self.restarts_used,
            best_of: self.best_of,
            grad_max: self.grad_max,
            iterations: 0,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        doc.state()?;
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
