//! Run configuration: parsing, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toric_core::lattice::{Cone, Vertex, Window};
use toric_core::oracle::MAX_BONDS;
use toric_core::pauli::PauliOp;
use toric_core::vacuum::CENSUS_MAX_BONDS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Geometry,
    OmegaOracle,
    Canonical,
    Classify,
    DenseDecompose,
    Split,
    H0,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Geometry,
        Suite::OmegaOracle,
        Suite::Canonical,
        Suite::Classify,
        Suite::DenseDecompose,
        Suite::Split,
        Suite::H0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::OmegaOracle => "omega-oracle",
            Suite::Canonical => "canonical",
            Suite::Classify => "classify",
            Suite::DenseDecompose => "dense-decompose",
            Suite::Split => "split",
            Suite::H0 => "h0",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_window() -> Window {
    Window::new(-8, 8, -5, 11).expect("valid default")
}

fn default_outer() -> Cone {
    Cone::new(Vertex::new(0, 0), (1, 1), (-1, 1)).expect("valid default")
}

fn default_inner() -> Cone {
    default_outer().translated(0, 1)
}

fn default_lambda() -> Cone {
    Cone::new(Vertex::new(0, 0), (1, 0), (0, 1)).expect("valid default")
}

fn default_oracle_window() -> Window {
    Window::new(0, 3, 0, 2).expect("valid default")
}

fn default_census_window() -> Window {
    Window::new(0, 2, 0, 2).expect("valid default")
}

fn default_census_factors() -> usize {
    4
}

fn default_seed() -> u64 {
    20_240_601
}

fn default_trials() -> usize {
    200
}

fn default_suites() -> Vec<Suite> {
    Suite::ALL.to_vec()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("toric-out")
}

/// Every field is optional; see `docs/config.schema.json` for the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Window for the scaffold, the split checks and the rendered lattice.
    #[serde(default = "default_window")]
    pub window: Window,
    /// Inner cone of the nested pair.
    #[serde(default = "default_inner")]
    pub lambda1: Cone,
    /// Outer cone of the nested pair.
    #[serde(default = "default_outer")]
    pub lambda2: Cone,
    /// Single cone for the classify and dense-decompose suites.
    #[serde(default = "default_lambda")]
    pub lambda: Cone,
    #[serde(default = "default_oracle_window")]
    pub oracle_window: Window,
    #[serde(default = "default_census_window")]
    pub census_window: Window,
    #[serde(default = "default_census_factors")]
    pub census_factors: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Random samples per suite.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_suites")]
    pub suites: Vec<Suite>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Operator drawn by `render canonical-form`; a seeded string product when absent.
    #[serde(default)]
    pub operator: Option<PauliOp>,
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults parse")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let config = Config::parse(&text).map_err(|e| match e {
            ConfigError::Parse { line, column, message, .. } => {
                ConfigError::Parse { path: path.into(), line, column, message }
            }
            other => other,
        })?;
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let config: Config = serde_json::from_str(text).map_err(|e| {
            let mut message = e.to_string();
            if let Some(i) = message.rfind(" at line ") {
                message.truncate(i);
            }
            ConfigError::Parse { path: PathBuf::from("<config>"), line: e.line(), column: e.column(), message }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, message: String| Err(ConfigError::Invalid { field, message });
        if self.trials == 0 {
            return invalid("trials", "must be at least 1".into());
        }
        if self.suites.is_empty() {
            return invalid("suites", "select at least one suite".into());
        }
        if self.threads == Some(0) {
            return invalid("threads", "must be at least 1".into());
        }
        if self.window.shrink(1).is_none() {
            return invalid("window", "needs interior vertices".into());
        }
        if self.oracle_window.bond_count() > MAX_BONDS {
            let n = self.oracle_window.bond_count();
            return invalid("oracle_window", format!("{n} bonds; the dense oracle supports at most {MAX_BONDS}"));
        }
        if self.census_window.bond_count() > CENSUS_MAX_BONDS {
            let n = self.census_window.bond_count();
            return invalid("census_window", format!("{n} bonds; the census supports at most {CENSUS_MAX_BONDS}"));
        }
        if self.census_factors == 0 {
            return invalid("census_factors", "must be at least 1".into());
        }
        Ok(())
    }

    /// The suites in canonical order, without repeats.
    pub fn selected_suites(&self) -> Vec<Suite> {
        Suite::ALL.into_iter().filter(|s| self.suites.contains(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = Config::parse("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.lambda1, default_outer().translated(0, 1));
        assert_eq!(c.oracle_window.bond_count(), 17);
        assert_eq!(c.census_window.bond_count(), 12);
        assert_eq!(c.selected_suites(), Suite::ALL.to_vec());
    }

    #[test]
    fn unknown_field_is_reported_with_position() {
        let err = Config::parse("{\n  \"seed\": 3,\n  \"sed\": 4\n}").unwrap_err();
        match err {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("sed"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn degenerate_cone_is_rejected() {
        let text = r#"{"lambda": {"apex": {"x": 0, "y": 0}, "d1": [1, 0], "d2": [-2, 0]}}"#;
        assert!(matches!(Config::parse(text), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn semantic_checks_name_the_field() {
        let err = Config::parse(r#"{"trials": 0}"#).unwrap_err();
        assert!(err.to_string().starts_with("field `trials`"));
        let err = Config::parse(r#"{"oracle_window": {"xmin": 0, "xmax": 5, "ymin": 0, "ymax": 5}}"#).unwrap_err();
        assert!(err.to_string().contains("oracle_window"));
        let err = Config::parse(r#"{"suites": []}"#).unwrap_err();
        assert!(err.to_string().contains("suites"));
    }

    #[test]
    fn suite_names_round_trip() {
        let c = Config::parse(r#"{"suites": ["h0", "omega-oracle", "h0"]}"#).unwrap();
        assert_eq!(c.selected_suites(), vec![Suite::OmegaOracle, Suite::H0]);
        for s in Suite::ALL {
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
    }
}
