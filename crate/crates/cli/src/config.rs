//! Run configuration: a TOML file overriding built-in defaults, with
//! command-line flags overriding the file. The effective configuration
//! is echoed into every artifact a command writes. Output destinations
//! are flags only, so moving an artifact never changes its bytes.

use std::path::{Path, PathBuf};

use lsr_core::distill::{EnsembleMode, LossConfig, Schedule};
use lsr_core::{ScoreMode, SearchParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub paths: Paths,
    pub search: SearchSection,
    pub loss: LossSection,
    pub schedule: ScheduleSection,
    pub mining: MiningSection,
}

/// Input files. Relative paths resolve against the working directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub teachers: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mined: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idf: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qrels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Plain,
    IdfWeighted,
}

impl From<Mode> for ScoreMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Plain => ScoreMode::Plain,
            Mode::IdfWeighted => ScoreMode::IdfWeighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub k: usize,
    pub mode: Mode,
    pub two_phase: bool,
    pub window: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idf_threshold: Option<f64>,
    pub run_tag: String,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self { k: 10, mode: Mode::IdfWeighted, two_phase: false, window: 100, idf_threshold: None, run_tag: "lsr".into() }
    }
}

impl SearchSection {
    pub fn params(&self) -> CliResult<SearchParams> {
        let mut p = SearchParams::new(self.k, self.mode.into());
        if self.two_phase {
            p = p.with_two_phase(self.window, self.idf_threshold);
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Pretrain,
    #[default]
    Finetune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    #[default]
    NormAndAdd,
    SimplyAdd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    /// Supplies `lambda_d` and `scale_s` unless they are set explicitly.
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_s: Option<f64>,
    pub idf_aware: bool,
    pub ensemble: Ensemble,
}

impl Default for LossSection {
    fn default() -> Self {
        Self { preset: Preset::Finetune, lambda_d: None, scale_s: None, idf_aware: true, ensemble: Ensemble::NormAndAdd }
    }
}

impl LossSection {
    pub fn loss_config(&self) -> CliResult<LossConfig> {
        let base = match self.preset {
            Preset::Pretrain => LossConfig::pretrain(),
            Preset::Finetune => LossConfig::finetune(),
        };
        let cfg = LossConfig {
            lambda_d: self.lambda_d.unwrap_or(base.lambda_d),
            scale_s: self.scale_s.unwrap_or(base.scale_s),
            idf_aware: self.idf_aware,
            ensemble: match self.ensemble {
                Ensemble::NormAndAdd => EnsembleMode::NormAndAdd,
                Ensemble::SimplyAdd => EnsembleMode::SimplyAdd,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub steps: usize,
    pub batch_size: usize,
    pub negatives_per_query: usize,
    pub learning_rate: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let s = Schedule::default();
        Self { steps: s.steps, batch_size: s.batch_size, negatives_per_query: s.negatives_per_query, learning_rate: s.learning_rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningSection {
    /// Candidates retrieved per query.
    pub m: usize,
    /// Consistency-filter cutoff: keep pairs whose positive ranks within it.
    pub filter_k: usize,
}

impl Default for MiningSection {
    fn default() -> Self {
        Self { m: 50, filter_k: 10 }
    }
}

impl Config {
    /// Defaults, or the file at `path` layered over them.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            steps: self.schedule.steps,
            batch_size: self.schedule.batch_size,
            negatives_per_query: self.schedule.negatives_per_query,
            learning_rate: self.schedule.learning_rate,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_finetune_preset() {
        let c = Config::default();
        assert_eq!(c.loss.loss_config().unwrap(), LossConfig::finetune());
        assert_eq!(c.search.k, 10);
        assert_eq!(c.mining.filter_k, 10);
    }

    #[test]
    fn file_overrides_defaults_and_round_trips() {
        let c = Config::parse("seed = 7\n[loss]\npreset = \"pretrain\"\nidf_aware = false\n[search]\nmode = \"plain\"\n").unwrap();
        assert_eq!(c.seed, 7);
        let loss = c.loss.loss_config().unwrap();
        assert_eq!((loss.lambda_d, loss.scale_s, loss.idf_aware), (1e-7, 10.0, false));
        assert_eq!(c.search.mode, Mode::Plain);
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn explicit_values_beat_the_preset() {
        let c = Config::parse("[loss]\npreset = \"pretrain\"\nlambda_d = 0.5\n").unwrap();
        assert_eq!(c.loss.loss_config().unwrap().lambda_d, 0.5);
        assert_eq!(c.loss.loss_config().unwrap().scale_s, 10.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(Config::parse("[loss]\nlambda = 1\n").is_err());
        assert!(Config::parse("[search]\nmode = \"bm25\"\n").is_err());
        let c = Config::parse("[loss]\nscale_s = 0\n").unwrap();
        assert!(c.loss.loss_config().is_err());
        let c = Config::parse("[search]\nk = 10\ntwo_phase = true\nwindow = 5\n").unwrap();
        assert!(c.search.params().is_err());
    }
}
