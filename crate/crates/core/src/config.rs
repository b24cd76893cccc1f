//! Experiment configuration shared by every pipeline stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::de::{preset, DEConfig, Strategy};
use crate::ela::{SampleDesign, Sampler};
use crate::error::{Error, Result};
use crate::forest::{default_grid, HyperParams};
use crate::rng;
use crate::similarity::{Aggregation, Normalization, SimilarityConfig};
use crate::suite::{self, SUITE_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub id: String,
    pub strategy: Strategy,
    pub f: f64,
    pub cr: f64,
}

impl AlgorithmSpec {
    pub fn preset(id: &str) -> Result<Self> {
        let (strategy, f, cr) = preset(id)?;
        Ok(AlgorithmSpec {
            id: id.to_string(),
            strategy,
            f,
            cr,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    pub dimension: usize,
    pub algorithms: Vec<AlgorithmSpec>,
    pub budget_factor: usize,
    pub runs: usize,
    pub sample_factor: usize,
    pub repetitions: usize,
    pub sampler: Sampler,
    pub thresholds: Vec<f64>,
    pub portfolios: Vec<usize>,
    pub aggregation: Aggregation,
    pub normalization: Normalization,
    pub importance_repeats: usize,
    /// Hyperparameter grid; the full 192-point grid when absent.
    pub grid: Option<Vec<HyperParams>>,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            suite: SUITE_NAMES[1].to_string(),
            dimension: suite::DEFAULT_DIMENSION,
            algorithms: ["de1", "de2", "de3"]
                .iter()
                .map(|id| AlgorithmSpec::preset(id).expect("built-in preset"))
                .collect(),
            budget_factor: 500,
            runs: 30,
            sample_factor: 800,
            repetitions: 30,
            sampler: Sampler::ImprovedLhs,
            thresholds: vec![0.5, 0.7, 0.9],
            portfolios: vec![10, 30],
            aggregation: Aggregation::WeightedMean,
            normalization: Normalization::MinMaxOnTrain,
            importance_repeats: 10,
            grid: None,
            master_seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        suite::suite_catalog(&self.suite, self.dimension.max(1))?;
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms configured".into()));
        }
        let mut ids: Vec<&str> = self.algorithms.iter().map(|a| a.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("algorithm ids must be unique".into()));
        }
        for c in self.de_configs()? {
            c.validate()?;
        }
        self.sample_design().validate(self.dimension)?;
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("thresholds must be strictly increasing".into()));
        }
        for c in self.similarity_configs() {
            c.validate()?;
        }
        if self.portfolios.is_empty() || self.portfolios.contains(&0) {
            return Err(Error::InvalidConfig("portfolio sizes must be positive".into()));
        }
        if self.importance_repeats == 0 {
            return Err(Error::InvalidConfig("importance_repeats must be positive".into()));
        }
        if let Some(g) = &self.grid {
            if g.is_empty() {
                return Err(Error::InvalidConfig("hyperparameter grid is empty".into()));
            }
            for p in g {
                p.validate()?;
            }
        }
        Ok(())
    }

    pub fn optimize_seed(&self) -> u64 {
        rng::stream_seed(&[self.master_seed, rng::tag("optimize")])
    }

    pub fn features_seed(&self) -> u64 {
        rng::stream_seed(&[self.master_seed, rng::tag("features")])
    }

    pub fn experiment_seed(&self) -> u64 {
        rng::stream_seed(&[self.master_seed, rng::tag("experiment")])
    }

    pub fn instance_seed(&self) -> u64 {
        rng::stream_seed(&[self.master_seed, rng::tag("instances")])
    }

    pub fn de_configs(&self) -> Result<Vec<DEConfig>> {
        Ok(self
            .algorithms
            .iter()
            .map(|a| DEConfig {
                algorithm_id: a.id.clone(),
                strategy: a.strategy,
                f: a.f,
                cr: a.cr,
                population_size: self.dimension,
                budget: self.budget_factor * self.dimension,
                runs: self.runs,
                seed: rng::stream_seed(&[self.optimize_seed(), rng::tag(&a.id)]),
            })
            .collect())
    }

    pub fn sample_design(&self) -> SampleDesign {
        SampleDesign::scaled(
            self.sample_factor,
            self.dimension,
            self.repetitions,
            self.sampler,
            self.features_seed(),
        )
    }

    pub fn similarity_configs(&self) -> Vec<SimilarityConfig> {
        self.thresholds
            .iter()
            .map(|&threshold| SimilarityConfig {
                threshold,
                aggregation: self.aggregation,
                normalize: self.normalization,
            })
            .collect()
    }

    pub fn grid(&self) -> Vec<HyperParams> {
        self.grid.clone().unwrap_or_else(default_grid)
    }
}
