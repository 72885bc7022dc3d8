//! One TOML config file for the whole pipeline, every field optional and
//! defaulted. Subcommand flags override individual values; the
//! `SWITCHDETECT_CONFIG` environment variable overrides where the file is
//! looked up (default `./switchdetect.toml`, silently skipped if absent).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{BucketingConfig, ConfigError};
use crate::model::{ModelConfig, ModelError};
use crate::synth::{GeneratorParams, SynthError};

pub const CONFIG_PATH_ENV: &str = "SWITCHDETECT_CONFIG";
pub const DEFAULT_CONFIG_PATH: &str = "switchdetect.toml";

#[derive(Debug, Error)]
pub enum PipelineConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Toml {
        path: String,
        source: toml::de::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Buckets(#[from] ConfigError),
    #[error(transparent)]
    Generator(#[from] SynthError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub beta: f64,
    pub prior_mean: f64,
    pub prior_variance: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            beta: m.beta,
            prior_mean: m.prior_mean,
            prior_variance: m.prior_variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturesSection {
    pub top_k_urls: usize,
    pub include_switch_events: bool,
    #[serde(flatten)]
    pub buckets: BucketingConfig,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            top_k_urls: 10,
            include_switch_events: false,
            buckets: BucketingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSection {
    pub modulus: u64,
    pub residue: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            modulus: 10,
            residue: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSection {
    pub seed: u64,
    pub n_users: u64,
    pub n_sessions: u64,
    pub n_queries: u64,
    pub n_urls: u64,
    pub base_switch_rate: f64,
    pub user_weight_sd: f64,
    pub noise_beta: f64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let g = GeneratorParams::default();
        GeneratorSection {
            seed: g.seed,
            n_users: g.n_users,
            n_sessions: g.n_sessions,
            n_queries: g.n_queries,
            n_urls: g.n_urls,
            base_switch_rate: g.base_switch_rate,
            user_weight_sd: g.user_weight_sd,
            noise_beta: g.noise_beta,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub model: ModelSection,
    pub features: FeaturesSection,
    pub split: SplitSection,
    pub generator: GeneratorSection,
}

impl PipelineConfig {
    pub fn model_config(&self) -> Result<ModelConfig, ModelError> {
        ModelConfig::new(
            self.model.beta,
            self.model.prior_mean,
            self.model.prior_variance,
        )
    }

    pub fn generator_params(&self) -> GeneratorParams {
        GeneratorParams {
            seed: self.generator.seed,
            n_users: self.generator.n_users,
            n_sessions: self.generator.n_sessions,
            n_queries: self.generator.n_queries,
            n_urls: self.generator.n_urls,
            base_switch_rate: self.generator.base_switch_rate,
            user_weight_sd: self.generator.user_weight_sd,
            noise_beta: self.generator.noise_beta,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineConfigError> {
        self.model_config()?;
        self.features.buckets.validate()?;
        self.generator_params().validate()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: PipelineConfig =
            toml::from_str(&text).map_err(|source| PipelineConfigError::Toml {
                path: path.display().to_string(),
                source,
            })?;
        config.validate()?;
        Ok(config)
    }
}
