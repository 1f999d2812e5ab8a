//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use approxifer_core::sim::LatencyModel;
use approxifer_core::CodingConfig;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetSpec;
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Simulate,
    /// Rounds run against loopback worker processes spawned in-process.
    Dispatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub k: Vec<usize>,
    pub s: Vec<usize>,
    pub e: Vec<usize>,
    pub sigma: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub sweep: Sweep,
    #[serde(default)]
    pub mode: Mode,
    pub output: PathBuf,
    #[serde(default = "default_rounds")]
    pub rounds_per_seed: usize,
    #[serde(default = "default_latency")]
    pub latency: LatencyModel,
    /// Dispatch mode only.
    #[serde(default = "default_deadline")]
    pub deadline_ms: u64,
    /// Dispatch mode only: injected delay of planned stragglers.
    #[serde(default = "default_straggler_delay")]
    pub straggler_delay_ms: u64,
}

fn default_rounds() -> usize {
    1
}

fn default_latency() -> LatencyModel {
    LatencyModel::exponential(1.0, 5.0)
}

fn default_deadline() -> u64 {
    5_000
}

fn default_straggler_delay() -> u64 {
    2_000
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative paths inside the config resolve against the config's directory.
        if let Some(dir) = path.parent() {
            config.output = dir.join(&config.output);
            if let ModelSpec::WeightsFile { path } = &mut config.model {
                *path = dir.join(&*path);
            }
            if let DatasetSpec::ExternalCsv { path } = &mut config.dataset {
                *path = dir.join(&*path);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let sweep = &self.sweep;
        if sweep.k.is_empty() || sweep.s.is_empty() || sweep.e.is_empty() || sweep.sigma.is_empty() {
            bail!("every sweep list must be non-empty");
        }
        if sweep.seeds.is_empty() {
            bail!("seed list must be non-empty");
        }
        if self.rounds_per_seed == 0 {
            bail!("rounds_per_seed must be positive");
        }
        if let Some(s) = sweep.sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            bail!("sigma {s} must be finite and non-negative");
        }
        for &k in &sweep.k {
            for &s in &sweep.s {
                for &e in &sweep.e {
                    CodingConfig::new(k, s, e).with_context(|| format!("sweep cell K={k} S={s} E={e}"))?;
                }
            }
        }
        if self.mode == Mode::Dispatch && self.deadline_ms == 0 {
            bail!("deadline_ms must be positive");
        }
        Ok(())
    }
}
