//! Versioned JSON checkpoints: network configuration, the scaling used to
//! encode training data, parameters, and optionally the optimizer state.
//! Floats are written in shortest round-trip form, so save → load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::image::ScalingSpec;
use crate::network::{NetworkConfig, Parameters};
use crate::optim::{AdamHyper, AdamState};
use crate::{Error, Result};

pub const FORMAT: &str = "mocap-tcn-checkpoint";
pub const VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerCheckpoint {
    pub hyper: AdamHyper,
    pub state: AdamState,
    pub epochs_done: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: NetworkConfig,
    pub scaling: ScalingSpec,
    pub params: Parameters,
    pub optimizer: Option<OptimizerCheckpoint>,
}

impl Checkpoint {
    pub fn new(config: NetworkConfig, scaling: ScalingSpec, params: Parameters) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            config,
            scaling,
            params,
            optimizer: None,
        }
    }

    pub fn with_optimizer(mut self, optimizer: OptimizerCheckpoint) -> Self {
        self.optimizer = Some(optimizer);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        if !self.params.is_finite() {
            return Err(Error::Checkpoint(
                "parameters contain non-finite values".into(),
            ));
        }
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != FORMAT {
            return Err(Error::Checkpoint(format!(
                "unknown format tag `{}`",
                ck.format
            )));
        }
        if ck.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (this build reads {VERSION})",
                ck.version
            )));
        }
        ck.config.validate()?;
        ck.params.check_matches(&ck.config)?;
        if let Some(opt) = &ck.optimizer {
            if !ck.params.same_shape(&opt.state.m) || !ck.params.same_shape(&opt.state.v) {
                return Err(Error::Checkpoint(
                    "optimizer state shape differs from parameters".into(),
                ));
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::in_file(path, e))
    }
}
