use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Default parameters, seed 0, CSV tables under `out/`.
    pub fn named(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters: BTreeMap::new(),
            seed: 0,
            output_dir: default_output_dir(),
            format: Format::Csv,
        }
    }

    pub fn with_parameter(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A declared parameter: key, default as a JSON literal, and a one-line help.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn param(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, default, help }
}

/// Declared parameters with the given values merged over their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, Value>,
}

impl Params {
    pub fn resolve(specs: &[ParamSpec], given: &BTreeMap<String, Value>) -> Result<Self, CliError> {
        if let Some(unknown) = given
            .keys()
            .find(|k| !specs.iter().any(|s| s.key == k.as_str()))
        {
            return Err(CliError::Config(format!("unknown parameter {unknown:?}")));
        }
        let mut values = BTreeMap::new();
        for s in specs {
            let v = match given.get(s.key) {
                Some(v) => v.clone(),
                None => serde_json::from_str(s.default).expect("parameter defaults are valid JSON"),
            };
            values.insert(s.key.to_string(), v);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &BTreeMap<String, Value> {
        &self.values
    }

    fn get<T: serde::de::DeserializeOwned>(&self, key: &str, what: &str) -> Result<T, CliError> {
        let v = self
            .values
            .get(key)
            .ok_or_else(|| CliError::Config(format!("parameter {key:?} is not declared")))?;
        serde_json::from_value(v.clone())
            .map_err(|_| CliError::Config(format!("parameter {key:?} must be {what}, got {v}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.get(key, "a number")?;
        if !x.is_finite() {
            return Err(CliError::Config(format!(
                "parameter {key:?} must be finite"
            )));
        }
        Ok(x)
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x = self.f64(key)?;
        if x <= 0.0 {
            return Err(CliError::Config(format!(
                "parameter {key:?} must be positive, got {x}"
            )));
        }
        Ok(x)
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.get(key, "a nonnegative integer")
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.get(key, "a list of numbers")
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        self.get(key, "a list of nonnegative integers")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const SPECS: &[ParamSpec] = &[param("n", "4", "cells"), param("hs", "[0.1, 0.2]", "steps")];

    #[test]
    fn defaults_and_overrides() {
        let mut given = BTreeMap::new();
        given.insert("n".to_string(), json!(8));
        let p = Params::resolve(SPECS, &given).unwrap();
        assert_eq!(p.usize("n").unwrap(), 8);
        assert_eq!(p.f64_list("hs").unwrap(), vec![0.1, 0.2]);
        assert!(p.f64_list("n").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut given = BTreeMap::new();
        given.insert("m".to_string(), json!(1));
        assert!(matches!(
            Params::resolve(SPECS, &given),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn config_fields() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"experiment": "sanov-ladder", "seed": 3, "format": "json"}"#)
                .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert!(
            serde_json::from_str::<ExperimentConfig>(r#"{"experiment": "x", "sed": 3}"#).is_err()
        );
    }
}
