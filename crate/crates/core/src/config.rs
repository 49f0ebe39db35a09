//! Run configuration, read from TOML or JSON (chosen by file extension).
//! Every key is optional; unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendConfig;
use crate::bench::CrossDatasetMean;
use crate::pipeline::{FilterSpec, InduceConfig, NliReference};
use crate::transforms::{ManipulationType, TransformConfig};

/// Environment variable naming the WordNet dictionary directory.
pub const WORDNET_DIR_ENV: &str = "AMRFOIL_WORDNET_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// A filter given by preset name (`main`, `neutral-ablation`) or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterSetting {
    Preset(String),
    Custom(FilterSpec),
}

impl Default for FilterSetting {
    fn default() -> Self {
        FilterSetting::Preset("main".into())
    }
}

impl FilterSetting {
    pub fn resolve(&self) -> Result<FilterSpec, ConfigError> {
        let spec = match self {
            FilterSetting::Preset(name) => FilterSpec::preset(name)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown filter preset `{name}`")))?,
            FilterSetting::Custom(spec) => spec.clone(),
        };
        spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    /// WordNet dictionary directory; falls back to [`WORDNET_DIR_ENV`].
    pub wordnet: Option<PathBuf>,
    pub backend: BackendConfig,
    pub filter: FilterSetting,
    /// Manipulations `induce` may choose from.
    pub allowed: BTreeSet<ManipulationType>,
    pub nli_reference: NliReference,
    pub workers: usize,
    pub transform: TransformConfig,
    pub cross_dataset_mean: CrossDatasetMean,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            wordnet: None,
            backend: BackendConfig::default(),
            filter: FilterSetting::default(),
            allowed: ManipulationType::ALL.into_iter().collect(),
            nli_reference: NliReference::Source,
            workers: 8,
            transform: TransformConfig::default(),
            cross_dataset_mean: CrossDatasetMean::Harmonic,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let syntax = |message: String| ConfigError::Syntax { path: path.into(), message };
        let config: Config = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| syntax(e.to_string()))?,
            _ => toml::from_str(&text).map_err(|e| syntax(e.to_string()))?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.filter.resolve()?;
        if self.allowed.is_empty() {
            return Err(ConfigError::Invalid("`allowed` must name at least one manipulation".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("`workers` must be positive".into()));
        }
        let b = &self.backend;
        if b.batch_size == 0 || b.max_in_flight == 0 || b.timeout_secs == 0 {
            return Err(ConfigError::Invalid("backend batch_size, max_in_flight and timeout_secs must be positive".into()));
        }
        Ok(())
    }

    pub fn wordnet_dir(&self) -> Option<PathBuf> {
        self.wordnet.clone().or_else(|| std::env::var_os(WORDNET_DIR_ENV).map(PathBuf::from))
    }

    pub fn induce_config(&self) -> Result<InduceConfig, ConfigError> {
        Ok(InduceConfig {
            seed: self.seed,
            filter: self.filter.resolve()?,
            allowed: self.allowed.clone(),
            nli_reference: self.nli_reference,
            workers: self.workers,
            transform: self.transform.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::NliLabel;

    fn write(name: &str, text: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        (dir, path)
    }

    #[test]
    fn toml_and_json_agree() {
        let (_a, toml_path) = write(
            "c.toml",
            "seed = 7\nallowed = [\"PN\", \"AR\"]\nfilter = \"neutral-ablation\"\n[backend]\nbase_url = \"http://x\"\nbatch_size = 4\n",
        );
        let (_b, json_path) = write(
            "c.json",
            r#"{"seed": 7, "allowed": ["PN", "AR"], "filter": "neutral-ablation", "backend": {"base_url": "http://x", "batch_size": 4}}"#,
        );
        let (t, j) = (Config::load(&toml_path).unwrap(), Config::load(&json_path).unwrap());
        assert_eq!(t, j);
        assert_eq!(t.seed, 7);
        assert_eq!(t.backend.batch_size, 4);
        assert_eq!(t.backend.retries, 2);
        assert_eq!(t.induce_config().unwrap().filter, FilterSpec::neutral_ablation());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let (_d, path) = write("c.toml", "sede = 7\n");
        assert!(matches!(Config::load(&path), Err(ConfigError::Syntax { .. })));
        let (_d, path) = write("c.toml", "[backend]\nurl = \"x\"\n");
        assert!(Config::load(&path).is_err());
    }

    #[test]
    fn custom_filters_are_validated() {
        let (_d, path) = write(
            "c.toml",
            "[filter]\nname = \"strict\"\ntarget_label = \"contradiction\"\nprob_low = 0.95\nprob_high = 1.0\n",
        );
        let filter = Config::load(&path).unwrap().induce_config().unwrap().filter;
        assert_eq!(filter.target_label, NliLabel::Contradiction);
        let (_d, path) = write(
            "c.toml",
            "[filter]\nname = \"bad\"\ntarget_label = \"neutral\"\nprob_low = 0.9\nprob_high = 0.1\n",
        );
        assert!(matches!(Config::load(&path), Err(ConfigError::Invalid(_))));
        let (_d, path) = write("c.toml", "filter = \"loose\"\n");
        assert!(matches!(Config::load(&path), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn empty_config_is_the_default() {
        let (_d, path) = write("c.toml", "");
        assert_eq!(Config::load(&path).unwrap(), Config::default());
        let (_d, path) = write("c.toml", "workers = 0\n");
        assert!(Config::load(&path).is_err());
    }
}
