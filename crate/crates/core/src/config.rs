//! Run configuration: defaults, partial overrides from TOML or JSON files,
//! and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyError, EnergyParams, EnergyWeights, IncidenceSign};
use crate::patch::Metric;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: unsupported config extension {ext:?} (expected toml or json)")]
    Extension { path: String, ext: String },
    #[error(transparent)]
    Invalid(#[from] EnergyError),
    #[error("invalid configuration: {message}")]
    Bad { message: String },
}

/// All knobs of a planning run.
///
/// `threads` is `None` unless set; everything else has a working default.
/// Files loaded with [`apply_file`](Self::apply_file) may set any subset of
/// keys and leave the rest alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub metric: Metric,
    /// How many worst facets to target.
    #[serde(rename = "K")]
    pub k: usize,
    /// Barycentric grid level for patch sampling.
    pub patch_subdivision: usize,
    pub incidence_sign: IncidenceSign,
    pub weights: EnergyWeights,
    pub params: EnergyParams,
    /// Seed for procedural texture generation in the simulator.
    pub seed: u64,
    /// Worker threads; `None` keeps the process default.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: Metric::Ssd,
            k: 10,
            patch_subdivision: 8,
            incidence_sign: IncidenceSign::default(),
            weights: EnergyWeights::default(),
            params: EnergyParams::default(),
            seed: 0,
            threads: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialWeights {
    mu1: Option<f64>,
    mu2: Option<f64>,
    mu3: Option<f64>,
    mu4: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialParams {
    penalty: Option<f64>,
    delta: Option<f64>,
    mu_angle_deg: Option<f64>,
    kappa: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    metric: Option<Metric>,
    #[serde(rename = "K")]
    k: Option<usize>,
    patch_subdivision: Option<usize>,
    incidence_sign: Option<IncidenceSign>,
    #[serde(default)]
    weights: PartialWeights,
    #[serde(default)]
    params: PartialParams,
    seed: Option<u64>,
    threads: Option<usize>,
}

impl RunConfig {
    /// Defaults overridden by the keys present in the file; see
    /// [`apply_file`](Self::apply_file).
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let mut config = RunConfig::default();
        config.apply_file(path)?;
        Ok(config)
    }

    /// Overrides the keys present in a TOML or JSON file (by extension) and
    /// leaves absent keys untouched. Unknown keys are rejected by name.
    /// Validates the result.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: display.clone(), source })?;
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        let partial: PartialConfig = match ext.as_str() {
            "toml" => toml::from_str(&text)
                .map_err(|e| ConfigError::Parse { path: display, message: e.to_string() })?,
            "json" => {
                let mut de = serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize(&mut de)
                    .map_err(|e| ConfigError::Parse { path: display, message: e.to_string() })?
            }
            _ => return Err(ConfigError::Extension { path: display, ext }),
        };
        self.apply(partial);
        self.validate()
    }

    fn apply(&mut self, partial: PartialConfig) {
        let PartialConfig {
            metric,
            k,
            patch_subdivision,
            incidence_sign,
            weights,
            params,
            seed,
            threads,
        } = partial;
        if let Some(v) = metric {
            self.metric = v;
        }
        if let Some(v) = k {
            self.k = v;
        }
        if let Some(v) = patch_subdivision {
            self.patch_subdivision = v;
        }
        if let Some(v) = incidence_sign {
            self.incidence_sign = v;
        }
        if let Some(v) = weights.mu1 {
            self.weights.mu1 = v;
        }
        if let Some(v) = weights.mu2 {
            self.weights.mu2 = v;
        }
        if let Some(v) = weights.mu3 {
            self.weights.mu3 = v;
        }
        if let Some(v) = weights.mu4 {
            self.weights.mu4 = v;
        }
        if let Some(v) = params.penalty {
            self.params.penalty = v;
        }
        if let Some(v) = params.delta {
            self.params.delta = v;
        }
        if let Some(v) = params.mu_angle_deg {
            self.params.mu_angle_deg = v;
        }
        if let Some(v) = params.kappa {
            self.params.kappa = v;
        }
        if let Some(v) = seed {
            self.seed = v;
        }
        if threads.is_some() {
            self.threads = threads;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::Bad { message: "K must be at least 1".into() });
        }
        if self.patch_subdivision == 0 {
            return Err(ConfigError::Bad {
                message: "patch_subdivision must be at least 1".into(),
            });
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Bad { message: "threads must be at least 1".into() });
        }
        self.weights.validate()?;
        self.params.validate()?;
        Ok(())
    }
}
