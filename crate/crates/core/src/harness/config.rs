use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::HeuristicMode;
use crate::dataset::{ColumnSpec, Format, Scale, SplitSpec};
use crate::error::{Error, Result};
use crate::listwise::{TrainConfig, DEFAULT_EPS};
use crate::metrics::DEFAULT_K;

/// Learning rates swept when no grid is given.
pub const DEFAULT_LR_GRID: [f64; 7] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ZeroshotListwise,
    Mf,
    Bpr,
    GlobalMean,
    UserMean,
    ItemMean,
    RandomUniform,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::ZeroshotListwise,
        Algorithm::Mf,
        Algorithm::Bpr,
        Algorithm::GlobalMean,
        Algorithm::UserMean,
        Algorithm::ItemMean,
        Algorithm::RandomUniform,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::ZeroshotListwise => "zeroshot_listwise",
            Algorithm::Mf => "mf",
            Algorithm::Bpr => "bpr",
            Algorithm::GlobalMean => "global_mean",
            Algorithm::UserMean => "user_mean",
            Algorithm::ItemMean => "item_mean",
            Algorithm::RandomUniform => "random_uniform",
        }
    }

    pub fn heuristic(&self) -> Option<HeuristicMode> {
        match self {
            Algorithm::GlobalMean => Some(HeuristicMode::GlobalMean),
            Algorithm::UserMean => Some(HeuristicMode::UserMean),
            Algorithm::ItemMean => Some(HeuristicMode::ItemMean),
            Algorithm::RandomUniform => Some(HeuristicMode::RandomUniform),
            _ => None,
        }
    }

    /// Whether the algorithm produces a factor model.
    pub fn has_factors(&self) -> bool {
        self.heuristic().is_none()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(Algorithm::as_str).collect();
                Error::usage(format!("unknown algorithm `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

fn default_format() -> Format {
    Format::MovielensDat
}
fn default_algorithm() -> Algorithm {
    Algorithm::ZeroshotListwise
}
fn default_dim() -> usize {
    10
}
fn default_lr() -> f64 {
    1e-3
}
fn default_seed() -> u64 {
    42
}
fn default_train_fraction() -> f64 {
    0.9
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_eps() -> f64 {
    DEFAULT_EPS
}

/// Everything needed to reproduce one run or sweep. Serialized as flat JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default)]
    pub columns: Option<ColumnSpec>,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub lr_grid: Option<Vec<f64>>,
    /// `None` picks a per-algorithm default.
    #[serde(default)]
    pub steps: Option<u64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub scale: Option<Scale>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Base path for reports and model dumps.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            format: default_format(),
            columns: None,
            algorithm: default_algorithm(),
            dim: default_dim(),
            learning_rate: default_lr(),
            lr_grid: None,
            steps: None,
            seed: default_seed(),
            train_fraction: default_train_fraction(),
            k: default_k(),
            scale: None,
            eps: default_eps(),
            out: None,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn split(&self) -> Result<SplitSpec> {
        SplitSpec::new(self.train_fraction, self.seed)
    }

    pub fn grid(&self) -> Vec<f64> {
        self.lr_grid.clone().unwrap_or_else(|| DEFAULT_LR_GRID.to_vec())
    }

    pub fn train_config(&self, learning_rate: f64, steps: u64) -> TrainConfig {
        TrainConfig {
            learning_rate,
            steps,
            dim: self.dim,
            seed: self.seed,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.split()?;
        if self.k == 0 {
            return Err(Error::usage("k must be at least 1"));
        }
        if let Some(scale) = self.scale {
            Scale::new(scale.min, scale.max)?;
        }
        if let Some(grid) = &self.lr_grid {
            if grid.is_empty() {
                return Err(Error::usage("learning-rate grid is empty"));
            }
        }
        for lr in self.lr_grid.iter().flatten().chain([&self.learning_rate]) {
            self.train_config(*lr, 1).validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"dataset": "x.dat"}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::new("x.dat"));
        assert_eq!(cfg.grid(), DEFAULT_LR_GRID.to_vec());
    }

    #[test]
    fn json_flat_keys() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"dataset": "r.csv", "format": "csv", "algorithm": "bpr", "lr_grid": [0.1, 0.2],
                "scale": {"min": 0.5, "max": 5}, "columns": {"user": "u", "item": "i", "rating": "r"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.algorithm, Algorithm::Bpr);
        assert_eq!(cfg.grid(), vec![0.1, 0.2]);
        assert_eq!(cfg.scale, Some(Scale { min: 0.5, max: 5.0 }));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dataset": "x", "bogus": 1}"#).is_err());
    }

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        assert!("zeromat".parse::<Algorithm>().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::new("x");
        assert!(cfg.validate().is_ok());
        cfg.lr_grid = Some(vec![]);
        assert!(cfg.validate().is_err());
        cfg.lr_grid = Some(vec![-1.0]);
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { train_fraction: 1.5, ..ExperimentConfig::new("x") };
        assert!(cfg.validate().is_err());
    }
}
