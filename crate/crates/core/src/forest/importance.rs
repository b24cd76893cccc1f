//! Permutation importance and fold-aggregated feature ranking.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Forest;
use crate::error::{Error, Result};

fn mae_of(forest: &Forest, x: &[Vec<f64>], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(r, t)| (forest.predict_row(r) - t).abs()).sum::<f64>() / x.len() as f64
}

/// Mean increase in MAE over `repeats` shuffles of each feature column.
pub fn permutation_importance(
    forest: &Forest,
    x: &[Vec<f64>],
    y: &[f64],
    repeats: usize,
    rng: &mut impl Rng,
) -> Result<BTreeMap<String, f64>> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("permutation repeats must be at least 1".into()));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("importance validation set"));
    }
    let k = forest.feature_names.len();
    if x.iter().any(|r| r.len() != k) || y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: x[0].len(),
        });
    }
    let base = mae_of(forest, x, y);
    let mut work = x.to_vec();
    let mut out = BTreeMap::new();
    for (j, name) in forest.feature_names.iter().enumerate() {
        let column: Vec<f64> = x.iter().map(|r| r[j]).collect();
        let mut total = 0.0;
        for _ in 0..repeats {
            let mut perm = column.clone();
            perm.shuffle(rng);
            for (row, v) in work.iter_mut().zip(&perm) {
                row[j] = *v;
            }
            total += mae_of(forest, &work, y) - base;
        }
        for (row, v) in work.iter_mut().zip(&column) {
            row[j] = *v;
        }
        out.insert(name.clone(), total / repeats as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub summed_importance: f64,
    pub rank: usize,
}

/// Every feature ranked by importance summed over folds, descending, ties
/// alphabetical. Ranks start at 1.
pub fn rank_features(per_fold: &[BTreeMap<String, f64>]) -> Result<Vec<RankedFeature>> {
    let first = per_fold.first().ok_or(Error::EmptyInput("fold importances"))?;
    let mut sums: BTreeMap<&str, f64> = first.keys().map(|k| (k.as_str(), 0.0)).collect();
    for (i, m) in per_fold.iter().enumerate() {
        if m.len() != first.len() || !m.keys().all(|k| first.contains_key(k)) {
            return Err(Error::InvalidConfig(format!("fold {i} importances cover a different feature set")));
        }
        for (k, v) in m {
            *sums.get_mut(k.as_str()).expect("checked key") += v;
        }
    }
    let mut ranked: Vec<(&str, f64)> = sums.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(i, (f, s))| RankedFeature {
            feature: f.to_string(),
            summed_importance: s,
            rank: i + 1,
        })
        .collect())
}

/// Names of the `k` highest-ranked features; all of them when fewer exist.
pub fn select_top_features(per_fold: &[BTreeMap<String, f64>], k: usize) -> Result<Vec<String>> {
    let ranked = rank_features(per_fold)?;
    if k > ranked.len() {
        log::warn!("requested {k} features but only {} are available", ranked.len());
    }
    Ok(ranked.into_iter().take(k).map(|r| r.feature).collect())
}
