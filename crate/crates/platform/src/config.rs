//! Study configuration: arms, eligibility policy, seed and file locations.
//!
//! Relative paths in a config file resolve against the file's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tradeoff_core::analysis::{AnalysisError, ArmFrontiers, BootstrapOptions, CellTable, FitOptions};
use tradeoff_core::elicitation::EligibilityPolicy;
use tradeoff_core::frontier::{ArmId, FrontierError, TradeoffArm};

/// Environment variable that overrides the config path.
pub const CONFIG_ENV: &str = "TRADEOFF_CONFIG";
pub const DEFAULT_CONFIG_PATH: &str = "config/study.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("no arms configured")]
    NoArms,
    #[error("arm `{0}` is configured twice")]
    DuplicateArm(ArmId),
    #[error("arm `{arm}`: {source}")]
    InvalidArm { arm: ArmId, source: FrontierError },
    #[error("{what} file {path} does not exist")]
    MissingFile { what: &'static str, path: PathBuf },
    #[error("cell weights {path}: {source}")]
    CellWeights { path: PathBuf, source: AnalysisError },
    #[error("invalid analysis settings: {0}")]
    InvalidSettings(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Bootstrap resamples per interval.
    pub bootstrap: usize,
    pub level: f64,
    pub max_attempt_factor: usize,
    /// Ridge used when an unpenalized fit separates; absent disables refits.
    pub separation_ridge: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        let fit = FitOptions::default();
        let boot = BootstrapOptions::default();
        Self {
            bootstrap: boot.replicates,
            level: boot.level,
            max_attempt_factor: boot.max_attempt_factor,
            separation_ridge: Some(1.0),
            tolerance: fit.tolerance,
            max_iterations: fit.max_iterations,
        }
    }
}

impl AnalysisSettings {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..FitOptions::default()
        }
    }

    /// `None` when `replicates` is zero.
    pub fn bootstrap_options(&self, replicates: usize, seed: u64) -> Option<BootstrapOptions> {
        (replicates > 0).then(|| BootstrapOptions {
            replicates,
            level: self.level,
            seed,
            max_attempt_factor: self.max_attempt_factor,
        })
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(ConfigError::InvalidSettings(format!("level {} outside (0, 1)", self.level)));
        }
        if self.max_attempt_factor == 0 {
            return Err(ConfigError::InvalidSettings("max_attempt_factor must be positive".into()));
        }
        if self.separation_ridge.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return Err(ConfigError::InvalidSettings("separation_ridge must be positive".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(ConfigError::InvalidSettings("tolerance and max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyFile {
    seed: u64,
    arms_file: Option<PathBuf>,
    #[serde(default)]
    arm: Vec<TradeoffArm>,
    cell_weights: PathBuf,
    event_log: PathBuf,
    output_dir: PathBuf,
    #[serde(default)]
    eligibility: EligibilityPolicy,
    #[serde(default)]
    analysis: AnalysisSettings,
}

/// Arm configuration document: a list of `[[arm]]` tables.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmsFile {
    pub arm: Vec<TradeoffArm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub seed: u64,
    pub arms: Vec<TradeoffArm>,
    pub eligibility: EligibilityPolicy,
    pub cell_weights: PathBuf,
    pub event_log: PathBuf,
    pub output_dir: PathBuf,
    pub analysis: AnalysisSettings,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_arms(path: &Path) -> Result<Vec<TradeoffArm>, ConfigError> {
    Ok(parse::<ArmsFile>(path, &read(path)?)?.arm)
}

/// Explicit path, else the environment override, else the default.
pub fn resolve_config_path(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG_PATH))
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file: StudyFile = parse(path, &read(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rel = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut arms = file.arm;
        if let Some(arms_file) = &file.arms_file {
            let arms_path = rel(arms_file);
            if !arms_path.is_file() {
                return Err(ConfigError::MissingFile {
                    what: "arms",
                    path: arms_path,
                });
            }
            arms.extend(load_arms(&arms_path)?);
        }
        let config = Self {
            seed: file.seed,
            arms,
            eligibility: file.eligibility,
            cell_weights: rel(&file.cell_weights),
            event_log: rel(&file.event_log),
            output_dir: rel(&file.output_dir),
            analysis: file.analysis,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks arm ids, arm geometry, settings and that the cell-weight file
    /// exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.arms.is_empty() {
            return Err(ConfigError::NoArms);
        }
        let mut seen = BTreeSet::new();
        for arm in &self.arms {
            if !seen.insert(arm.id) {
                return Err(ConfigError::DuplicateArm(arm.id));
            }
            arm.validate().map_err(|source| ConfigError::InvalidArm { arm: arm.id, source })?;
        }
        self.analysis.validate()?;
        if !self.cell_weights.is_file() {
            return Err(ConfigError::MissingFile {
                what: "cell-weight",
                path: self.cell_weights.clone(),
            });
        }
        Ok(())
    }

    pub fn arm(&self, id: ArmId) -> Option<&TradeoffArm> {
        self.arms.iter().find(|a| a.id == id)
    }

    pub fn frontiers(&self) -> ArmFrontiers {
        ArmFrontiers::from_arms(&self.arms).expect("arms are validated at load")
    }

    pub fn cells(&self) -> Result<CellTable, ConfigError> {
        if !self.cell_weights.is_file() {
            return Err(ConfigError::MissingFile {
                what: "cell-weight",
                path: self.cell_weights.clone(),
            });
        }
        CellTable::read_csv(&self.cell_weights).map_err(|source| ConfigError::CellWeights {
            path: self.cell_weights.clone(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const ARMS: &str = r#"
[[arm]]
id = "high"
label = "High trade-off"
daily_budget = 400.0
parity_share = 0.23
nominal_ratio = 6.0
n_points = 6
full_english = { english = 36, spanish = 3 }
full_spanish = { english = 7, spanish = 13 }
"#;

    fn study(extra: &str) -> String {
        format!(
            "seed = 7\narms_file = \"arms.toml\"\ncell_weights = \"cells.csv\"\n\
             event_log = \"data/events.jsonl\"\noutput_dir = \"out\"\n{extra}"
        )
    }

    #[test]
    fn loads_and_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "arms.toml", ARMS);
        let mut cells = Vec::new();
        CellTable::uniform().write_csv(&mut cells).unwrap();
        std::fs::write(dir.path().join("cells.csv"), cells).unwrap();
        let path = write(dir.path(), "study.toml", &study("[analysis]\nbootstrap = 50\n"));
        let c = StudyConfig::load(&path).unwrap();
        assert_eq!(c.arms, vec![TradeoffArm::high()]);
        assert_eq!(c.event_log, dir.path().join("data/events.jsonl"));
        assert_eq!(c.analysis.bootstrap, 50);
        assert_eq!(c.analysis.separation_ridge, Some(1.0));
        assert_eq!(c.cells().unwrap().len(), 3840);
    }

    #[test]
    fn missing_cell_weights_fail_at_load() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "arms.toml", ARMS);
        let path = write(dir.path(), "study.toml", &study(""));
        assert!(matches!(
            StudyConfig::load(&path),
            Err(ConfigError::MissingFile { what: "cell-weight", .. })
        ));
    }

    #[test]
    fn duplicate_arms_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "arms.toml", &format!("{ARMS}{ARMS}"));
        write(dir.path(), "cells.csv", "");
        let path = write(dir.path(), "study.toml", &study(""));
        assert!(matches!(StudyConfig::load(&path), Err(ConfigError::DuplicateArm(ArmId::High))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "study.toml", &study("colour = \"red\"\n"));
        assert!(matches!(StudyConfig::load(&path), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn explicit_path_wins() {
        assert_eq!(resolve_config_path(Some(Path::new("a.toml"))), PathBuf::from("a.toml"));
    }
}
