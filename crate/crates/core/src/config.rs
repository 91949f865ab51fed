//! Experiment configuration files and built-in presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{CellConfig, CellVariant, ClampMode, Geometry};
use crate::hamiltonian::HeisenbergSpec;
use crate::reference;
use crate::vmc::TrainConfig;
use crate::wavefunction::{Sublattice, WavefunctionModel};

/// Environment variable naming the default parent of run directories.
pub const OUTPUT_ROOT_ENV: &str = "HYPVMC_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

pub const PRESETS: [&str; 3] = ["j1j2", "j1j2j3", "smoke"];
/// Parameters `sweep` can vary.
pub const SWEEPABLE: [&str; 3] = ["r_max", "l_max", "lr_hyperbolic"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown preset `{0}` (expected one of j1j2, j1j2j3, smoke)")]
    UnknownPreset(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: CellVariant,
    pub hidden: usize,
    #[serde(default = "one")]
    pub r_max: f64,
    #[serde(default)]
    pub l_max: Option<f64>,
    #[serde(default)]
    pub clamp_mode: ClampMode,
    #[serde(default)]
    pub clamp_candidate: bool,
    #[serde(default)]
    pub phase_pi_scaling: bool,
    #[serde(default)]
    pub marshall_sublattice: Sublattice,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub j1: f64,
    #[serde(default)]
    pub j2: f64,
    #[serde(default)]
    pub j3: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Run directory; defaults to `$HYPVMC_OUTPUT_ROOT/<variant>-n<N>-s<seed>`.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub system: SystemConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.cell()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.spec()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn cell(&self) -> CellConfig {
        let m = &self.model;
        CellConfig {
            variant: m.variant,
            hidden: m.hidden,
            c: 1.0,
            r_max: m.r_max,
            l_max: m.l_max,
            clamp_mode: m.clamp_mode,
            clamp_candidate: m.clamp_candidate,
        }
    }

    pub fn spec(&self) -> HeisenbergSpec {
        let s = &self.system;
        HeisenbergSpec {
            n: s.n,
            j1: s.j1,
            j2: s.j2,
            j3: s.j3,
        }
    }

    /// Freshly initialized model seeded from `train.seed`.
    pub fn build_model(&self) -> Result<WavefunctionModel, ConfigError> {
        let mut m = WavefunctionModel::random(self.cell(), self.system.n, self.train.seed)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        m.phase_pi_scaling = self.model.phase_pi_scaling;
        m.marshall = self.model.marshall_sublattice;
        Ok(m)
    }

    /// Run directory: `output.dir`, or a name under the output root.
    pub fn run_dir(&self) -> PathBuf {
        if let Some(d) = &self.output.dir {
            return d.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
        root.join(format!(
            "{}-n{}-j2_{}-j3_{}-s{}",
            self.model.variant, self.system.n, self.system.j2, self.system.j3, self.train.seed
        ))
    }

    /// Applies one value of a sweepable parameter.
    pub fn set_param(&mut self, param: &str, value: f64) -> Result<(), ConfigError> {
        match param {
            "r_max" => self.model.r_max = value,
            "l_max" => self.model.l_max = Some(value),
            "lr_hyperbolic" => self.train.lr_hyperbolic = value,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "`{other}` is not sweepable (expected r_max, l_max or lr_hyperbolic)"
                )))
            }
        }
        self.validate()
    }

    /// Built-in experiment settings.
    ///
    /// `j1j2` and `j1j2j3` use the 100-site protocol with the published
    /// clamp settings for the given couplings; `smoke` is a 10-site run
    /// that finishes in well under a minute.
    pub fn preset(name: &str, variant: CellVariant, j2: f64, j3: f64) -> Result<Self, ConfigError> {
        let (n, epochs, hidden) = match name {
            "j1j2" => (
                reference::REFERENCE_SITES,
                reference::J1J2_EPOCHS,
                reference::reference_hidden(variant, 0.0),
            ),
            "j1j2j3" => (
                reference::REFERENCE_SITES,
                reference::J1J2J3_EPOCHS,
                reference::reference_hidden(variant, if j3 == 0.0 { 0.5 } else { j3 }),
            ),
            "smoke" => (10, 200, 16),
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        };
        let j3 = if name == "j1j2" { 0.0 } else { j3 };
        let mut model = ModelConfig {
            variant,
            hidden,
            r_max: 1.0,
            l_max: None,
            clamp_mode: ClampMode::Single,
            clamp_candidate: false,
            phase_pi_scaling: false,
            marshall_sublattice: Sublattice::Even,
        };
        match variant.geometry() {
            Geometry::Euclidean => {}
            Geometry::Poincare => {
                model.r_max = reference::reference_r_max(variant, j2, j3).unwrap_or(0.618);
            }
            Geometry::Lorentz => {
                let (l, mode) =
                    reference::reference_l_max(variant, j2, j3).unwrap_or((2.0, ClampMode::Double));
                model.l_max = Some(l);
                model.clamp_mode = mode;
            }
        }
        let cfg = Self {
            model,
            system: SystemConfig { n, j1: 1.0, j2, j3 },
            train: TrainConfig {
                epochs,
                ..TrainConfig::default()
            },
            output: OutputConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": {"variant": "poincare_rnn", "hidden": 8}, "system": {"n": 6}}"#,
        )
        .unwrap();
        assert_eq!(cfg.train.batch, 80);
        assert_eq!(cfg.train.lr_euclidean, 5e-3);
        assert_eq!(cfg.train.plateau_factor, 2.0);
        assert_eq!(cfg.train.plateau_patience, 40);
        assert_eq!(cfg.train.early_stop_patience, 200);
        assert_eq!(cfg.train.eval_samples, 10_000);
        assert_eq!(cfg.model.r_max, 1.0);
        assert_eq!(cfg.system.j1, 1.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            r#"{"model": {"variant": "poincare_rnn", "hidden": 8, "depth": 2}, "system": {"n": 6}}"#,
            r#"{"model": {"variant": "poincare_rnn", "hidden": 8}, "system": {"n": 6}, "extra": 1}"#,
            r#"{"model": {"variant": "lstm", "hidden": 8}, "system": {"n": 6}}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let text = r#"{"model": {"variant": "poincare_rnn", "hidden": 8, "r_max": 1.5}, "system": {"n": 6}}"#;
        assert!(matches!(ExperimentConfig::from_json(text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn presets_follow_reference_protocol() {
        let c = ExperimentConfig::preset("j1j2", CellVariant::LorentzRnn, 0.5, 0.0).unwrap();
        assert_eq!((c.system.n, c.train.epochs, c.model.hidden), (100, 1000, 70));
        assert_eq!((c.model.l_max, c.model.clamp_mode), (Some(2.0), ClampMode::Single));
        let c = ExperimentConfig::preset("j1j2j3", CellVariant::EuclideanRnn, 0.2, 0.2).unwrap();
        assert_eq!((c.train.epochs, c.model.hidden), (1200, 80));
        let c = ExperimentConfig::preset("j1j2j3", CellVariant::EuclideanGru, 0.2, 0.2).unwrap();
        assert_eq!(c.model.hidden, 70);
        let c = ExperimentConfig::preset("smoke", CellVariant::EuclideanGru, 0.0, 0.0).unwrap();
        assert_eq!((c.system.n, c.train.epochs), (10, 200));
        assert!(ExperimentConfig::preset("big", CellVariant::EuclideanGru, 0.0, 0.0).is_err());
    }

    #[test]
    fn sweep_parameters() {
        let mut c = ExperimentConfig::preset("smoke", CellVariant::PoincareRnn, 0.0, 0.0).unwrap();
        c.set_param("r_max", 0.99).unwrap();
        assert_eq!(c.model.r_max, 0.99);
        assert!(c.set_param("hidden", 3.0).is_err());
        assert!(c.set_param("r_max", 2.0).is_err());
    }
}
