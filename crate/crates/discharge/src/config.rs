//! Run configuration shared by every command.
//!
//! Values resolve as command-line flag, then config file, then built-in
//! defaults. The resolved config is echoed into every output sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use discharge_core::{NoiseConfig, SimOptions, Simulator, SynthesisConfig, TrainConfig, VehicleParams};
use discharge_core::domain::ProfileSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub vehicle: VehicleParams,
    pub profiles: ProfileSet,
    pub synthesis: SynthesisConfig,
    pub options: SimOptions,
    pub noise: NoiseConfig,
    pub train: TrainConfig,
    pub paths: Paths,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
    }

    /// Defaults, overlaid with `path` if given.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn simulator(&self) -> Simulator {
        Simulator { vehicle: self.vehicle, profiles: self.profiles, synthesis: self.synthesis, options: self.options }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::usage("--seed is required (or `seed` in the config file)"))
    }

    pub fn validate(&self) -> Result<()> {
        self.simulator().validate().map_err(usage_from_core)?;
        self.noise.validate().map_err(usage_from_core)?;
        self.train.validate().map_err(usage_from_core)?;
        let paths: Vec<&PathBuf> =
            [&self.paths.corpus, &self.paths.model, &self.paths.report_dir].into_iter().flatten().collect();
        for (i, a) in paths.iter().enumerate() {
            if paths[i + 1..].contains(a) {
                return Err(Error::usage(format!("path {} is used for two different outputs", a.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Turns a parameter error into a usage error that names the offending flag.
pub fn usage_from_core(err: discharge_core::Error) -> Error {
    match err {
        discharge_core::Error::InvalidArgument { name, reason } => {
            Error::usage(format!("invalid --{}: {reason}", name.replace('_', "-")))
        }
        other => Error::Core(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_argument_errors_name_the_flag() {
        let err = usage_from_core(discharge_core::Error::InvalidArgument { name: "n_steps", reason: "must be positive".into() });
        assert_eq!(err.to_string(), "invalid --n-steps: must be positive");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = Some(1);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn shared_output_paths_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.paths.corpus = Some("out".into());
        cfg.paths.report_dir = Some("out".into());
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
    }
}
