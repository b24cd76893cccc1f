//! Leave-one-problem-out evaluation of the forest and its calibrated variant.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::de::PerformanceRecord;
use crate::ela::FeatureVector;
use crate::error::{Error, Result};
use crate::forest::{fit_forest, grid_search, permutation_importance, rank_features, HyperParams, RankedFeature};
use crate::key::InstanceKey;
use crate::rng;
use crate::similarity::{calibrate, Aggregation, CalibratedPrediction, NeighborIndex, Normalization, SimilarityConfig};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub features: FeatureVector,
    /// log10 of the median precision.
    pub target: f64,
}

impl DatasetRow {
    pub fn key(&self) -> &InstanceKey {
        &self.features.key
    }
}

/// Feature/target rows sorted by instance key, with the portfolio columns
/// extracted in portfolio order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<DatasetRow>,
    portfolio: Vec<String>,
    x: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(mut rows: Vec<DatasetRow>, portfolio: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        if portfolio.is_empty() {
            return Err(Error::EmptyInput("feature portfolio"));
        }
        rows.sort_by(|a, b| a.key().cmp(b.key()));
        for w in rows.windows(2) {
            if w[0].key().class_id == w[1].key().class_id && w[0].key().instance_id == w[1].key().instance_id {
                return Err(Error::DuplicateInstance {
                    class_id: w[0].key().class_id,
                    instance_id: w[0].key().instance_id,
                });
            }
        }
        let x = rows.iter().map(|r| r.features.select(&portfolio)).collect::<Result<Vec<_>>>()?;
        Ok(Dataset { rows, portfolio, x })
    }

    /// Joins one algorithm's performance records with feature vectors on
    /// (suite, class, instance). The portfolio is every feature column.
    pub fn from_records(performance: &[PerformanceRecord], features: &[FeatureVector], algorithm_id: &str) -> Result<Self> {
        let perf: BTreeMap<InstanceKey, f64> = performance
            .iter()
            .filter(|p| p.algorithm_id == algorithm_id)
            .map(|p| (InstanceKey::new(&p.suite, p.class_id, p.instance_id), p.log_median_precision))
            .collect();
        if perf.is_empty() {
            return Err(Error::UnknownAlgorithm(algorithm_id.to_string()));
        }
        let feat: BTreeMap<&InstanceKey, &FeatureVector> = features.iter().map(|f| (&f.key, f)).collect();
        let only_perf: Vec<String> = perf.keys().filter(|k| !feat.contains_key(k)).map(|k| k.to_string()).collect();
        let only_feat: Vec<String> = feat.keys().filter(|k| !perf.contains_key(*k)).map(|k| k.to_string()).collect();
        if !only_perf.is_empty() || !only_feat.is_empty() {
            return Err(Error::InstanceMismatch(format!(
                "only in performance: [{}]; only in features: [{}]",
                only_perf.join(", "),
                only_feat.join(", ")
            )));
        }
        let portfolio = features.first().map(|f| f.names.clone()).unwrap_or_default();
        let rows = perf
            .into_iter()
            .map(|(k, target)| DatasetRow {
                features: feat[&k].clone(),
                target,
            })
            .collect();
        Dataset::new(rows, portfolio)
    }

    pub fn with_portfolio(&self, portfolio: &[String]) -> Result<Self> {
        Dataset::new(self.rows.clone(), portfolio.to_vec())
    }

    pub fn rows(&self) -> &[DatasetRow] {
        &self.rows
    }

    pub fn portfolio(&self) -> &[String] {
        &self.portfolio
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Portfolio values of row `i`.
    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.rows[i].target
    }

    pub fn class_of(&self, i: usize) -> u32 {
        self.rows[i].key().class_id
    }

    pub fn class_ids(&self) -> Vec<u32> {
        self.rows
            .iter()
            .map(|r| r.key().class_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn subset(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<u32>) {
        (
            idx.iter().map(|&i| self.x[i].clone()).collect(),
            idx.iter().map(|&i| self.target(i)).collect(),
            idx.iter().map(|&i| self.class_of(i)).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub held_out_class: u32,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per class in class order; the class's rows form the test set.
pub fn make_lopo_folds(dataset: &Dataset) -> Result<Vec<Fold>> {
    let classes = dataset.class_ids();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    Ok(classes
        .into_iter()
        .map(|c| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| dataset.class_of(i) == c);
            Fold {
                held_out_class: c,
                train,
                test,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSettings {
    pub grid: Vec<HyperParams>,
    pub similarity: Vec<SimilarityConfig>,
    /// Permutation repeats for importance on the training rows, if wanted.
    pub importance_repeats: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborRef {
    pub class_id: u32,
    pub instance_id: u32,
    pub similarity: f64,
    pub performance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    pub threshold: f64,
    pub aggregation: Aggregation,
    pub calibrated: Vec<CalibratedPrediction>,
    pub rfclust_abs_errors: Vec<f64>,
    pub neighbor_counts: Vec<usize>,
    pub neighbors: Vec<Vec<NeighborRef>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub held_out_class: u32,
    pub test_keys: Vec<InstanceKey>,
    pub train_classes: Vec<u32>,
    pub targets: Vec<f64>,
    pub rf_predictions: Vec<f64>,
    pub rf_abs_errors: Vec<f64>,
    /// In-sample MAE of the fitted forest on its training rows.
    pub train_mae: f64,
    pub tuned_params: HyperParams,
    pub importance: Option<BTreeMap<String, f64>>,
    pub outcomes: Vec<ThresholdOutcome>,
}

impl FoldReport {
    pub fn rf_mae(&self) -> f64 {
        stats::mean(&self.rf_abs_errors)
    }

    pub fn outcome(&self, threshold: f64) -> Option<&ThresholdOutcome> {
        self.outcomes.iter().find(|o| o.threshold == threshold)
    }

    pub fn rfclust_mae(&self, threshold: f64) -> Option<f64> {
        self.outcome(threshold).map(|o| stats::mean(&o.rfclust_abs_errors))
    }
}

/// Tunes and fits a forest on the training rows, predicts the held-out rows
/// and calibrates each prediction with neighbours from the training rows.
pub fn run_fold(dataset: &Dataset, fold: &Fold, settings: &FoldSettings) -> Result<FoldReport> {
    let class = u64::from(fold.held_out_class);
    let (x, y, groups) = dataset.subset(&fold.train);
    if x.is_empty() || fold.test.is_empty() {
        return Err(Error::EmptyInput("fold"));
    }
    let names = dataset.portfolio();
    let tuned = grid_search(
        &x,
        &y,
        names,
        &groups,
        &settings.grid,
        rng::stream_seed(&[settings.seed, class, rng::tag("tune")]),
    )?;
    let forest = fit_forest(
        &x,
        &y,
        names,
        &tuned.best,
        rng::stream_seed(&[settings.seed, class, rng::tag("forest")]),
    )?;
    let train_mae = x.iter().zip(&y).map(|(r, t)| (forest.predict_row(r) - t).abs()).sum::<f64>() / x.len() as f64;
    let importance = match settings.importance_repeats {
        Some(repeats) => {
            let mut r = rng::stream_rng(&[settings.seed, class, rng::tag("importance")]);
            Some(permutation_importance(&forest, &x, &y, repeats, &mut r)?)
        }
        None => None,
    };

    let targets: Vec<f64> = fold.test.iter().map(|&i| dataset.target(i)).collect();
    let rf_predictions: Vec<f64> = fold.test.iter().map(|&i| forest.predict_row(dataset.x(i))).collect();
    let rf_abs_errors: Vec<f64> = rf_predictions.iter().zip(&targets).map(|(p, t)| (p - t).abs()).collect();

    let mut indices: BTreeMap<bool, NeighborIndex> = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(settings.similarity.len());
    for cfg in &settings.similarity {
        let key = cfg.normalize == Normalization::MinMaxOnTrain;
        let index = match indices.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(NeighborIndex::new(&x, &y, cfg.normalize)?),
        };
        let mut calibrated = Vec::with_capacity(fold.test.len());
        let mut neighbors = Vec::with_capacity(fold.test.len());
        for (t, &i) in fold.test.iter().enumerate() {
            let set = index.query(dataset.x(i), cfg.threshold)?;
            calibrated.push(calibrate(rf_predictions[t], &set, cfg.aggregation));
            neighbors.push(
                set.entries
                    .iter()
                    .map(|e| {
                        let key = dataset.rows()[fold.train[e.train_index]].key();
                        NeighborRef {
                            class_id: key.class_id,
                            instance_id: key.instance_id,
                            similarity: e.similarity,
                            performance: e.performance,
                        }
                    })
                    .collect(),
            );
        }
        outcomes.push(ThresholdOutcome {
            threshold: cfg.threshold,
            aggregation: cfg.aggregation,
            rfclust_abs_errors: calibrated
                .iter()
                .zip(&targets)
                .map(|(c, t)| (c.final_prediction - t).abs())
                .collect(),
            neighbor_counts: calibrated.iter().map(|c| c.neighbor_count).collect(),
            calibrated,
            neighbors,
        });
    }
    Ok(FoldReport {
        held_out_class: fold.held_out_class,
        test_keys: fold.test.iter().map(|&i| dataset.rows()[i].key().clone()).collect(),
        train_classes: groups.into_iter().collect::<BTreeSet<_>>().into_iter().collect(),
        targets,
        rf_predictions,
        rf_abs_errors,
        train_mae,
        tuned_params: tuned.best,
        importance,
        outcomes,
    })
}

/// Every fold of the dataset, run in parallel and returned in class order.
pub fn run_lopo(dataset: &Dataset, settings: &FoldSettings) -> Result<Vec<FoldReport>> {
    make_lopo_folds(dataset)?
        .par_iter()
        .map(|f| run_fold(dataset, f, settings))
        .collect()
}

pub fn mae(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("error list"));
    }
    Ok(errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub algorithm_id: String,
    pub threshold: f64,
    pub portfolio: usize,
    pub n_better: usize,
    pub n_equal: usize,
    pub n_worse: usize,
}

/// Counts classes where the calibrated fold MAE is lower than, bitwise
/// equal to, or higher than the forest's fold MAE.
pub fn compare(algorithm_id: &str, portfolio: usize, reports: &[FoldReport], threshold: f64) -> Result<ComparisonSummary> {
    let mut s = ComparisonSummary {
        algorithm_id: algorithm_id.to_string(),
        threshold,
        portfolio,
        n_better: 0,
        n_equal: 0,
        n_worse: 0,
    };
    for r in reports {
        let rf = mae(&r.rf_abs_errors)?;
        let cl = r
            .rfclust_mae(threshold)
            .ok_or_else(|| Error::IncompleteBundle(format!("threshold {threshold} for class {}", r.held_out_class)))?;
        if cl.to_bits() == rf.to_bits() {
            s.n_equal += 1;
        } else if cl < rf {
            s.n_better += 1;
        } else {
            s.n_worse += 1;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticPair {
    pub focus_instance: u32,
    pub other_class: u32,
    pub other_instance: u32,
    pub similarity: f64,
    pub performance_gap: f64,
}

/// Similarity and absolute target gap between every focus-class row and
/// every row of another class, with scaling fitted on the other classes.
/// Pairs with an undefined similarity are omitted.
pub fn similarity_diagnostics(dataset: &Dataset, focus_class: u32, normalization: Normalization) -> Result<Vec<DiagnosticPair>> {
    let (focus, others): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| dataset.class_of(i) == focus_class);
    if focus.is_empty() {
        return Err(Error::InvalidConfig(format!("class {focus_class} is not in the dataset")));
    }
    if others.is_empty() {
        return Err(Error::TooFewClasses(1));
    }
    let (x, y, _) = dataset.subset(&others);
    let index = NeighborIndex::new(&x, &y, normalization)?;
    let mut out = Vec::new();
    for &f in &focus {
        let sims = index.similarities(dataset.x(f))?;
        for (j, s) in sims.into_iter().enumerate() {
            if let Some(similarity) = s {
                let key = dataset.rows()[others[j]].key();
                out.push(DiagnosticPair {
                    focus_instance: dataset.rows()[f].key().instance_id,
                    other_class: key.class_id,
                    other_instance: key.instance_id,
                    similarity,
                    performance_gap: (dataset.target(f) - y[j]).abs(),
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.focus_instance.cmp(&b.focus_instance))
            .then(a.other_class.cmp(&b.other_class))
            .then(a.other_instance.cmp(&b.other_instance))
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDiagnostics {
    pub class_id: u32,
    pub pairs: Vec<DiagnosticPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioResult {
    pub size: usize,
    pub features: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub comparisons: Vec<ComparisonSummary>,
    pub mae_train: f64,
    pub mae_test: f64,
    pub diagnostics: Vec<ClassDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm_id: String,
    pub ranking: Vec<RankedFeature>,
    pub portfolios: Vec<PortfolioResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBundle {
    pub generator: String,
    pub config: ExperimentConfig,
    pub experiment_seed: u64,
    pub algorithms: Vec<AlgorithmResult>,
}

/// Per algorithm: ranks features by fold importances on the full feature
/// set, then runs the LOPO comparison for every portfolio size.
pub fn run_experiment(
    performance: &[PerformanceRecord],
    features: &[FeatureVector],
    config: &ExperimentConfig,
) -> Result<ExperimentBundle> {
    config.validate()?;
    let seed = config.experiment_seed();
    let grid = config.grid();
    let sims = config.similarity_configs();
    let mut algorithms = Vec::with_capacity(config.algorithms.len());
    for alg in &config.algorithms {
        let full = Dataset::from_records(performance, features, &alg.id)?;
        let alg_seed = rng::stream_seed(&[seed, rng::tag(&alg.id)]);
        log::info!("{}: ranking features over {} folds", alg.id, full.class_ids().len());
        let importance_reports = run_lopo(
            &full,
            &FoldSettings {
                grid: grid.clone(),
                similarity: Vec::new(),
                importance_repeats: Some(config.importance_repeats),
                seed: rng::stream_seed(&[alg_seed, rng::tag("importance")]),
            },
        )?;
        let maps: Vec<BTreeMap<String, f64>> = importance_reports
            .into_iter()
            .map(|r| r.importance.expect("importance requested"))
            .collect();
        let ranking = rank_features(&maps)?;
        let mut portfolios = Vec::with_capacity(config.portfolios.len());
        for &size in &config.portfolios {
            if size > ranking.len() {
                log::warn!("portfolio of {size} exceeds the {} available features", ranking.len());
            }
            let names: Vec<String> = ranking.iter().take(size).map(|r| r.feature.clone()).collect();
            let data = full.with_portfolio(&names)?;
            log::info!("{}: LOPO with the top {} features", alg.id, names.len());
            let folds = run_lopo(
                &data,
                &FoldSettings {
                    grid: grid.clone(),
                    similarity: sims.clone(),
                    importance_repeats: None,
                    seed: rng::stream_seed(&[alg_seed, rng::tag("portfolio"), size as u64]),
                },
            )?;
            let comparisons = config
                .thresholds
                .iter()
                .map(|&t| compare(&alg.id, size, &folds, t))
                .collect::<Result<Vec<_>>>()?;
            let mae_train = stats::mean(&folds.iter().map(|f| f.train_mae).collect::<Vec<_>>());
            let mae_test = mae(&folds.iter().flat_map(|f| f.rf_abs_errors.iter().copied()).collect::<Vec<_>>())?;
            let diagnostics = data
                .class_ids()
                .into_iter()
                .map(|c| {
                    Ok(ClassDiagnostics {
                        class_id: c,
                        pairs: similarity_diagnostics(&data, c, config.normalization)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            portfolios.push(PortfolioResult {
                size,
                features: names,
                folds,
                comparisons,
                mae_train,
                mae_test,
                diagnostics,
            });
        }
        algorithms.push(AlgorithmResult {
            algorithm_id: alg.id.clone(),
            ranking,
            portfolios,
        });
    }
    Ok(ExperimentBundle {
        generator: crate::io::header_text(config.master_seed),
        config: config.clone(),
        experiment_seed: seed,
        algorithms,
    })
}
