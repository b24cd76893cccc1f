//! Random-forest regression written from scratch, with grid-search tuning and
//! permutation importance for fold-aggregated feature selection.

mod importance;
mod tree;
mod tuning;

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use importance::{permutation_importance, rank_features, select_top_features, RankedFeature};
pub use tree::{fit_tree, fit_tree_on, Node, Tree, TreeParams};
pub use tuning::{default_grid, grid_search, group_folds, inner_cv_score, TuningResult};

use crate::ela::FeatureVector;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    /// Candidate features per split out of `k`.
    pub fn count(self, k: usize) -> usize {
        let kf = k as f64;
        let m = match self {
            MaxFeatures::All => k,
            MaxFeatures::Sqrt => kf.sqrt().ceil() as usize,
            MaxFeatures::Log2 => kf.log2().ceil() as usize,
        };
        m.clamp(1, k.max(1))
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaxFeatures::All => "all",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 || self.max_depth == 0 || self.min_samples_split < 2 {
            return Err(Error::InvalidConfig(format!("invalid forest parameters {self:?}")));
        }
        Ok(())
    }

    fn tree_params(&self, k: usize) -> TreeParams {
        TreeParams {
            max_features: self.max_features.count(k),
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestOptions {
    /// Resample `n` rows with replacement per tree; off only for tests.
    pub bootstrap: bool,
}

impl Default for ForestOptions {
    fn default() -> Self {
        ForestOptions { bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub params: HyperParams,
    pub feature_names: Vec<String>,
    pub bootstrap_seeds: Vec<u64>,
}

pub fn fit_forest(x: &[Vec<f64>], y: &[f64], feature_names: &[String], params: &HyperParams, seed: u64) -> Result<Forest> {
    fit_forest_with(x, y, feature_names, params, seed, ForestOptions::default())
}

/// Trees are fitted in parallel; tree `t` uses the stream `(seed, t)`.
pub fn fit_forest_with(
    x: &[Vec<f64>],
    y: &[f64],
    feature_names: &[String],
    params: &HyperParams,
    seed: u64,
    options: ForestOptions,
) -> Result<Forest> {
    params.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyInput("forest training set"));
    }
    if x[0].len() != feature_names.len() {
        return Err(Error::DimensionMismatch {
            expected: feature_names.len(),
            got: x[0].len(),
        });
    }
    let n = x.len();
    let tree_params = params.tree_params(feature_names.len());
    let seeds: Vec<u64> = (0..params.n_estimators).map(|t| rng::stream_seed(&[seed, t as u64])).collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut r = <rng::StreamRng as rand::SeedableRng>::seed_from_u64(s);
            let rows: Vec<usize> = if options.bootstrap {
                (0..n).map(|_| r.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree_on(x, y, &rows, &tree_params, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        trees,
        params: *params,
        feature_names: feature_names.to_vec(),
        bootstrap_seeds: seeds,
    })
}

impl Forest {
    /// Mean of the per-tree predictions for a row in `feature_names` order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        Ok(self.predict_row(&features.select(&self.feature_names)?))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "params": self.params,
            "feature_names": self.feature_names,
            "trees": self.trees.iter().map(|t| t.to_json(&self.feature_names)).collect::<Vec<_>>(),
        })
    }
}
