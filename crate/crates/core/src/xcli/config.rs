//! Experiment configuration files.
//!
//! Precedence, highest first: command-line flags, the config file,
//! the `CHAOS_ENT_OUT` environment variable (output directory only),
//! built-in defaults.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const OUT_ENV: &str = "CHAOS_ENT_OUT";
pub const DEFAULT_OUT: &str = "results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    /// Lifts the dense-state memory guards.
    #[serde(default)]
    pub allow_large: bool,
    #[serde(default)]
    pub params: toml::Table,
}

/// Values supplied on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// The part of a config that determines results; embedded in every output.
#[derive(Serialize)]
struct Embedded<'a> {
    experiment: &'a str,
    master_seed: u64,
    allow_large: bool,
    params: &'a toml::Table,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        if let Some(seed) = overrides.seed {
            let seed = i64::try_from(seed).map_err(|_| Error::Config("seed must fit in a signed 64-bit TOML integer".into()))?;
            table.insert("master_seed".into(), toml::Value::Integer(seed));
        }
        if let Some(w) = overrides.workers {
            table.insert("workers".into(), toml::Value::Integer(w as i64));
        }
        if let Some(dir) = &overrides.output_dir {
            table.insert("output_dir".into(), toml::Value::String(dir.to_string_lossy().into_owned()));
        }
        let cfg: ExperimentConfig = table.try_into().map_err(config_err)?;
        if cfg.workers == Some(0) {
            return Err(Error::Config("`workers` must be at least 1".into()));
        }
        if cfg.formats.is_empty() {
            return Err(Error::Config("`formats` must name at least one format".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Output directory after applying the environment fallback.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Canonical TOML of the result-determining fields. Worker count and
    /// output location are left out so they cannot change the artifacts.
    pub fn embedded_text(&self) -> String {
        let e = Embedded {
            experiment: &self.experiment,
            master_seed: self.master_seed,
            allow_large: self.allow_large,
            params: &self.params,
        };
        toml::to_string(&e).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.embedded_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Required parameter from the `[params]` table.
    pub fn param<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .params
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing required key `params.{key}`")))?;
        v.clone().try_into().map_err(|e| Error::Config(format!("invalid value for `params.{key}`: {e}")))
    }

    pub fn param_or<T: DeserializeOwned>(&self, key: &str, default: T) -> Result<T> {
        if self.params.contains_key(key) {
            self.param(key)
        } else {
            Ok(default)
        }
    }

    pub fn param_opt<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        if self.params.contains_key(key) {
            self.param(key).map(Some)
        } else {
            Ok(None)
        }
    }
}
