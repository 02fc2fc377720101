//! Declarative run files.
//!
//! ```toml
//! seed = 7
//! out_dir = "runs/demo"
//! jobs = 4
//!
//! [synth]
//! days = 200
//! generator = "nlm"
//!
//! [estimation.simplex]
//! restarts = 8
//!
//! [fit]
//! models = ["lm2", "nlm"]
//!
//! [backtest]
//! models = ["naive", "lm2", "nlm"]
//! dm_phi = [1, 2]
//! [backtest.window]
//! in_sample_days = 100
//! out_sample_days = 100
//!
//! [scenario.grid]
//! gammas = [0.1, 1.0, 5.0]
//! ```
//!
//! Every section is optional. Command-line flags override the file.

use std::fs;
use std::path::{Path, PathBuf};

use meritshift_core::data::{default_true_beta, SynthConfig};
use meritshift_core::evaluation::{BacktestConfig, LossNorm};
use meritshift_core::models::FitOptions;
use meritshift_core::scenario::ScenarioGrid;
use meritshift_core::ModelId;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub models: Vec<ModelId>,
    /// Fit on the first this many days; all data when absent.
    pub train_days: Option<usize>,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            models: ModelId::ALL.to_vec(),
            train_days: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestSection {
    pub models: Vec<ModelId>,
    pub window: BacktestConfig,
    /// Loss exponents for the DM table.
    pub dm_phi: Vec<u8>,
}

impl Default for BacktestSection {
    fn default() -> Self {
        BacktestSection {
            models: ModelId::ALL.to_vec(),
            window: BacktestConfig::default(),
            dm_phi: vec![1, 2],
        }
    }
}

impl BacktestSection {
    pub fn norms(&self) -> Result<Vec<LossNorm>> {
        Ok(self.dm_phi.iter().map(|&p| LossNorm::from_phi(p)).collect::<Result<_, _>>()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Models fitted on the dataset when no fit files are given.
    pub models: Vec<ModelId>,
    pub grid: ScenarioGrid,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            models: ModelId::ALL.to_vec(),
            grid: ScenarioGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub synth: SynthConfig,
    pub estimation: FitOptions,
    pub fit: FitSection,
    pub backtest: BacktestSection,
    pub scenario: ScenarioSection,
    /// Whether `synth.true_beta` was given explicitly. When it was not, the
    /// generator's default coefficients are used.
    #[serde(skip)]
    pub explicit_beta: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| AppError::Usage(format!("{}: {e}", path.display()));
        let table: toml::Table = text.parse().map_err(|e| bad(&e))?;
        let explicit_beta = table
            .get("synth")
            .and_then(|s| s.get("true_beta"))
            .is_some();
        let mut cfg: RunConfig = table.try_into().map_err(|e| bad(&e))?;
        cfg.explicit_beta = explicit_beta;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    /// Fills in generator-dependent defaults once all overrides are applied.
    pub fn resolve(mut self) -> Self {
        if !self.explicit_beta {
            self.synth.true_beta = default_true_beta(self.synth.generator);
        }
        self.seed.get_or_insert(DEFAULT_SEED);
        self.out_dir.get_or_insert_with(|| PathBuf::from(DEFAULT_OUT_DIR));
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("", Path::new("x.toml")).unwrap().resolve();
        assert_eq!(cfg.seed(), DEFAULT_SEED);
        assert_eq!(cfg.backtest.window, BacktestConfig::default());
        assert_eq!(cfg.scenario.grid, ScenarioGrid::default());
        assert_eq!(cfg.fit.models.len(), 9);
    }

    #[test]
    fn generator_switch_picks_matching_beta() {
        let cfg = RunConfig::from_toml("[synth]\ngenerator = \"lm2\"\n", Path::new("x.toml"))
            .unwrap()
            .resolve();
        assert_eq!(cfg.synth.true_beta, default_true_beta(ModelId::Lm2));

        let cfg = RunConfig::from_toml("[synth]\ngenerator = \"lm1\"\ntrue_beta = [1,2,3,4,5,6,7]\n", Path::new("x.toml"))
            .unwrap()
            .resolve();
        assert_eq!(cfg.synth.true_beta, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn nested_sections_parse() {
        let text = r#"
            seed = 7
            [estimation.simplex]
            restarts = 2
            [backtest]
            models = ["naive", "mcq"]
            [backtest.window]
            in_sample_days = 10
            [scenario.grid]
            technologies = ["wind+solar"]
        "#;
        let cfg = RunConfig::from_toml(text, Path::new("x.toml")).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.estimation.simplex.restarts, 2);
        assert_eq!(cfg.backtest.models, vec![ModelId::Naive, ModelId::Mcq]);
        assert_eq!(cfg.backtest.window.in_sample_days, 10);
        assert_eq!(cfg.backtest.window.out_sample_days, 364);
        assert_eq!(cfg.scenario.grid.technologies.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sede = 1", Path::new("x.toml")).is_err());
        assert!(RunConfig::from_toml("[backtest.window]\nin_sample = 3", Path::new("x.toml")).is_err());
        assert!(RunConfig::from_toml("[fit]\nmodels = [\"lm9\"]", Path::new("x.toml")).is_err());
    }
}
