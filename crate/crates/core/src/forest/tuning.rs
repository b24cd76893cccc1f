//! Exhaustive grid search with group-aware inner cross-validation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_forest, HyperParams, MaxFeatures};
use crate::error::{Error, Result};
use crate::rng;

pub const N_ESTIMATORS: [usize; 4] = [10, 20, 50, 70];
pub const MAX_FEATURES: [MaxFeatures; 3] = [MaxFeatures::All, MaxFeatures::Sqrt, MaxFeatures::Log2];
pub const MAX_DEPTH: [usize; 4] = [3, 5, 7, 10];
pub const MIN_SAMPLES_SPLIT: [usize; 4] = [2, 5, 7, 10];
pub const INNER_FOLDS: usize = 3;

/// The 192-point grid with `n_estimators` varying slowest, so smaller
/// ensembles come first.
pub fn default_grid() -> Vec<HyperParams> {
    let mut grid = Vec::with_capacity(192);
    for &n_estimators in &N_ESTIMATORS {
        for &max_features in &MAX_FEATURES {
            for &max_depth in &MAX_DEPTH {
                for &min_samples_split in &MIN_SAMPLES_SPLIT {
                    grid.push(HyperParams {
                        n_estimators,
                        max_features,
                        max_depth,
                        min_samples_split,
                    });
                }
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub best: HyperParams,
    /// Mean inner MAE per grid point, in grid order. Empty when no inner
    /// validation was possible.
    pub scores: Vec<f64>,
}

/// Held-out row indices per inner fold. With at least `n_folds` groups the
/// shuffled groups are dealt round-robin; otherwise each group is its own fold.
pub fn group_folds(groups: &[u32], n_folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let distinct: Vec<u32> = groups.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut order = distinct.clone();
    let n_folds = if distinct.len() < n_folds {
        distinct.len()
    } else {
        order.shuffle(&mut rng::stream_rng(&[seed, rng::tag("group-folds")]));
        n_folds
    };
    let mut folds = vec![Vec::new(); n_folds];
    for (i, g) in order.iter().enumerate() {
        let f = i % n_folds;
        folds[f].extend(groups.iter().enumerate().filter(|(_, h)| *h == g).map(|(r, _)| r));
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Mean over folds of the held-out MAE for one parameter setting.
pub fn inner_cv_score(x: &[Vec<f64>], y: &[f64], names: &[String], folds: &[Vec<usize>], params: &HyperParams, seed: u64) -> Result<f64> {
    Ok(prefix_scores(x, y, names, folds, params, &[params.n_estimators], seed)?[0])
}

/// Inner-CV scores for several ensemble sizes sharing the other settings.
/// Tree `t` depends only on `(seed, t)`, so each smaller ensemble is a prefix
/// of the largest one and the scores equal separate fits bit for bit.
fn prefix_scores(
    x: &[Vec<f64>],
    y: &[f64],
    names: &[String],
    folds: &[Vec<usize>],
    params: &HyperParams,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let largest = HyperParams {
        n_estimators: sizes.iter().copied().max().unwrap_or(1),
        ..*params
    };
    let mut totals = vec![0.0; sizes.len()];
    for (f, test) in folds.iter().enumerate() {
        let held: BTreeSet<usize> = test.iter().copied().collect();
        let train: Vec<usize> = (0..x.len()).filter(|r| !held.contains(r)).collect();
        let tx: Vec<Vec<f64>> = train.iter().map(|&r| x[r].clone()).collect();
        let ty: Vec<f64> = train.iter().map(|&r| y[r]).collect();
        let forest = fit_forest(&tx, &ty, names, &largest, rng::stream_seed(&[seed, f as u64]))?;
        let mut errs = vec![0.0; sizes.len()];
        for &r in test {
            let mut acc = 0.0;
            let mut cum = Vec::with_capacity(forest.trees.len());
            for t in &forest.trees {
                acc += t.predict(&x[r]);
                cum.push(acc);
            }
            for (e, &n) in errs.iter_mut().zip(sizes) {
                *e += (cum[n - 1] / n as f64 - y[r]).abs();
            }
        }
        for (t, e) in totals.iter_mut().zip(errs) {
            *t += e / test.len() as f64;
        }
    }
    Ok(totals.into_iter().map(|t| t / folds.len() as f64).collect())
}

/// Picks the grid point with the lowest inner MAE; the earliest point wins ties.
pub fn grid_search(x: &[Vec<f64>], y: &[f64], names: &[String], groups: &[u32], grid: &[HyperParams], seed: u64) -> Result<TuningResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty hyperparameter grid".into()));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("tuning set"));
    }
    if groups.len() != x.len() || y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: groups.len().min(y.len()),
        });
    }
    for p in grid {
        p.validate()?;
    }
    let folds = group_folds(groups, INNER_FOLDS, seed);
    if folds.len() < 2 {
        log::warn!("a single group cannot be cross-validated; using the first grid point");
        return Ok(TuningResult {
            best: grid[0],
            scores: Vec::new(),
        });
    }
    // grid points differing only in n_estimators share one fit
    let mut settings: Vec<(HyperParams, Vec<usize>)> = Vec::new();
    for (i, p) in grid.iter().enumerate() {
        let key = HyperParams { n_estimators: 1, ..*p };
        match settings.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => settings.push((key, vec![i])),
        }
    }
    let grouped = settings
        .par_iter()
        .map(|(key, members)| {
            let sizes: Vec<usize> = members.iter().map(|&i| grid[i].n_estimators).collect();
            prefix_scores(x, y, names, &folds, key, &sizes, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut scores = vec![0.0; grid.len()];
    for ((_, members), s) in settings.iter().zip(grouped) {
        for (&i, v) in members.iter().zip(s) {
            scores[i] = v;
        }
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(TuningResult { best: grid[best], scores })
}
