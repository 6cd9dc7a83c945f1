//! Run configuration: a single JSON file, schema-validated, with CLI flag
//! overrides applied on top. Unknown fields are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Plotdata,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "plotdata" => Ok(OutputFormat::Plotdata),
            other => Err(Error::config(format!(
                "unknown format `{other}`; expected csv, json or plotdata"
            ))),
        }
    }
}

/// One requested closed-form bound: a theorem id plus its parameters.
/// Numeric parameters may be scalars or arrays (grids); tail profiles are
/// strings like `bounded:1` or `weibull:1,1,1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRequest {
    pub theorem: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub bounds: Vec<BoundRequest>,
    /// Moment orders `r = 2k` for estimation and the default verify set.
    #[serde(default)]
    pub orders: Vec<u32>,
    /// Tail thresholds `t` for empirical tails.
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_batches")]
    pub batches: u64,
    #[serde(default)]
    pub seed: u64,
    /// Highest `f` degree for the Stein identity check (0 disables it).
    #[serde(default = "default_identity_degree")]
    pub identity_degree: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Record real wall times in the `seconds` column. Off by default so
    /// that identical configs reproduce byte-identical outputs.
    #[serde(default)]
    pub timing: bool,
}

fn default_samples() -> u64 {
    100_000
}

fn default_batches() -> u64 {
    50
}

fn default_identity_degree() -> u32 {
    3
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            bounds: Vec::new(),
            orders: Vec::new(),
            thresholds: Vec::new(),
            samples: default_samples(),
            batches: default_batches(),
            seed: 0,
            identity_degree: default_identity_degree(),
            out: None,
            format: OutputFormat::Csv,
            timing: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::config("samples must be positive"));
        }
        if self.batches == 0 {
            return Err(Error::config("batches must be positive"));
        }
        for &r in &self.orders {
            if r == 0 {
                return Err(Error::config("orders must be >= 1"));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved config; hashed into every report.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.samples, 100_000);
        assert_eq!(c.batches, 50);
        assert_eq!(c.format, OutputFormat::Csv);
        assert!(!c.timing);
        assert!(RunConfig::from_json(r#"{"samples":0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn full_config_round_trips() {
        let json = r#"{
            "model": {"model": {"size_bias_runs": {"n": 1000, "m": 2, "p": 0.5}}, "seed": 7},
            "orders": [2, 4],
            "bounds": [{"theorem": "thm1", "params": {"k": [1, 2]}}],
            "samples": 50000,
            "batches": 50,
            "format": "json"
        }"#;
        let c = RunConfig::from_json(json).unwrap();
        assert_eq!(c.orders, vec![2, 4]);
        let again = RunConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(again.canonical_json(), c.canonical_json());
    }
}
