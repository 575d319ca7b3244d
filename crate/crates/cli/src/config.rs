use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use labelsphere::trainer::{DemoConfig, SyntheticConfig, TrainConfig};
use labelsphere::{Error, PmiMode, PmiOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Full symmetric eigendecomposition.
    #[default]
    Dense,
    /// Leading k eigenpairs only.
    Lanczos,
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub annotations: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    /// Embedding dimension; `min(N, 256)` when unset.
    pub k: Option<usize>,
    pub min_count: u64,
    pub pmi_mode: PmiMode,
    pub alpha: f64,
    pub zero_diagonal: bool,
    pub solver: Solver,
    pub cap_min: f64,
    pub cap_max: f64,
    pub p: usize,
    pub seed: u64,
    pub demo: DemoSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            annotations: None,
            vocab: None,
            embeddings: None,
            weights: None,
            k: None,
            min_count: 1,
            pmi_mode: PmiMode::Positive,
            alpha: 0.0,
            zero_diagonal: false,
            solver: Solver::Dense,
            cap_min: 0.1,
            cap_max: 10.0,
            p: 100,
            seed: 0,
            demo: DemoSection::default(),
        }
    }
}

/// Synthetic comparison settings. Seed, p and caps come from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSection {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub eval_every: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    pub k: usize,
    pub init_scale: f64,
    pub data: SyntheticConfig,
}

impl Default for DemoSection {
    fn default() -> Self {
        let d = DemoConfig::default();
        Self {
            steps: d.train.steps,
            batch_size: d.train.batch_size,
            learning_rate: d.train.learning_rate,
            eval_every: d.train.eval_every,
            train_instances: d.train_instances,
            test_instances: d.test_instances,
            k: d.k,
            init_scale: d.init_scale,
            data: d.data,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> labelsphere::Result<()> {
        let bad = |msg: String| Err(Error::Argument(msg));
        if self.k == Some(0) {
            return bad("k must be at least 1".into());
        }
        if self.min_count == 0 {
            return bad("min-count must be at least 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be a finite value >= 0, got {}", self.alpha));
        }
        if !(self.cap_min > 0.0 && self.cap_min <= self.cap_max && self.cap_max.is_finite()) {
            return bad(format!(
                "caps must satisfy 0 < cap-min <= cap-max, got ({}, {})",
                self.cap_min, self.cap_max
            ));
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed must be at most {}", i64::MAX));
        }
        self.demo.data.validate()
    }

    pub fn pmi_options(&self) -> PmiOptions {
        PmiOptions {
            mode: self.pmi_mode,
            alpha: self.alpha,
            zero_diagonal: self.zero_diagonal,
        }
    }

    pub fn demo_config(&self) -> DemoConfig {
        let d = &self.demo;
        DemoConfig {
            data: d.data.clone(),
            train: TrainConfig {
                steps: d.steps,
                batch_size: d.batch_size,
                learning_rate: d.learning_rate,
                eval_every: d.eval_every,
                seed: self.seed,
                p: self.p,
                cap_min: self.cap_min,
                cap_max: self.cap_max,
            },
            train_instances: d.train_instances,
            test_instances: d.test_instances,
            k: d.k,
            init_scale: d.init_scale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = PipelineConfig::default();
        let text = c.to_toml().unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), c);
    }

    #[test]
    fn awkward_values_round_trip() {
        let mut c = PipelineConfig {
            annotations: Some("data/ann.tsv".into()),
            k: Some(17),
            pmi_mode: PmiMode::Raw,
            alpha: 0.1 + 0.2,
            cap_min: 1.0 / 3.0,
            cap_max: 1e300,
            seed: u64::MAX >> 1,
            solver: Solver::Lanczos,
            ..Default::default()
        };
        c.demo.learning_rate = std::f64::consts::PI;
        c.demo.data.noise = 5e-324;
        let text = c.to_toml().unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c: PipelineConfig = toml::from_str("k = 4\n[demo]\nsteps = 10\n").unwrap();
        assert_eq!(c.k, Some(4));
        assert_eq!(c.demo.steps, 10);
        assert_eq!(c.cap_max, 10.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("kk = 4\n").is_err());
    }
}
