//! File-based stages: optimise, compute features, run the experiment, render.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::de::{collect_performance, PerformanceRecord};
use crate::ela::compute_all_features;
use crate::error::{Error, Result};
use crate::io;
use crate::lopo::{self, Dataset, DiagnosticPair, ExperimentBundle};
use crate::report::{self, Format};
use crate::suite::suite_instances;

pub const PERFORMANCE_FILE: &str = "performance.csv";
pub const PERFORMANCE_RUNS_FILE: &str = "performance_runs.csv";
pub const FEATURES_FILE: &str = "features.csv";

pub fn catalog(config: &ExperimentConfig) -> Result<String> {
    let instances = suite_instances(&config.suite, config.dimension, config.instance_seed())?;
    io::catalog_csv(&config.suite, &instances, config.master_seed)
}

/// Runs every configured algorithm on every suite instance.
pub fn optimize(config: &ExperimentConfig) -> Result<Vec<PerformanceRecord>> {
    config.validate()?;
    let instances = suite_instances(&config.suite, config.dimension, config.instance_seed())?;
    let mut out = Vec::new();
    for de in config.de_configs()? {
        log::info!("{}: {} instances x {} runs", de.algorithm_id, instances.len(), de.runs);
        out.extend(collect_performance(&de, &config.suite, &instances)?);
    }
    Ok(out)
}

/// Writes the aggregate and per-run performance files into `dir`.
pub fn optimize_to(config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    optimize_files(config, &dir.join(PERFORMANCE_FILE), &dir.join(PERFORMANCE_RUNS_FILE))
}

pub fn optimize_files(config: &ExperimentConfig, aggregate: &Path, runs: &Path) -> Result<Vec<PathBuf>> {
    let records = optimize(config)?;
    io::write_performance(aggregate, &records, config.master_seed)?;
    io::write_performance_runs(runs, &records, config.master_seed)?;
    Ok(vec![aggregate.to_path_buf(), runs.to_path_buf()])
}

pub fn features_to(config: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    features_file(config, &dir.join(FEATURES_FILE))
}

pub fn features_file(config: &ExperimentConfig, path: &Path) -> Result<PathBuf> {
    config.validate()?;
    let instances = suite_instances(&config.suite, config.dimension, config.instance_seed())?;
    log::info!("features for {} instances", instances.len());
    let vectors = compute_all_features(&config.suite, &instances, &config.sample_design())?;
    io::write_features(path, &vectors, config.master_seed)?;
    Ok(path.to_path_buf())
}

pub fn experiment(config: &ExperimentConfig, performance: &Path, features: &Path) -> Result<ExperimentBundle> {
    let perf = io::read_performance(performance)?;
    let feats = io::read_features(features)?;
    lopo::run_experiment(&perf, &feats, config)
}

/// Runs the experiment from staged files and writes every output into `dir`.
pub fn experiment_to(config: &ExperimentConfig, performance: &Path, features: &Path, dir: &Path) -> Result<Vec<PathBuf>> {
    let bundle = experiment(config, performance, features)?;
    report::write_experiment(&bundle, dir)
}

/// Re-renders the tables of a stored bundle.
pub fn report_to(bundle: &Path, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    report::render(&report::read_bundle(bundle)?, format, dir)
}

/// Similarity diagnostics for one class, on the full feature set or on the
/// first `top` features of an importance ranking.
pub fn diagnose(
    config: &ExperimentConfig,
    performance: &Path,
    features: &Path,
    algorithm_id: &str,
    class_id: u32,
    ranking: Option<(&Path, usize)>,
) -> Result<Vec<DiagnosticPair>> {
    let perf = io::read_performance(performance)?;
    let feats = io::read_features(features)?;
    let mut data = Dataset::from_records(&perf, &feats, algorithm_id)?;
    if let Some((path, top)) = ranking {
        let names: Vec<String> = io::read_importance(path)?.into_iter().take(top).map(|r| r.feature).collect();
        if names.is_empty() {
            return Err(Error::parse(path, "importance ranking is empty"));
        }
        data = data.with_portfolio(&names)?;
    }
    lopo::similarity_diagnostics(&data, class_id, config.normalization)
}

pub fn diagnostics_csv(pairs: &[DiagnosticPair], seed: u64) -> Result<String> {
    io::csv_string(seed, |w| {
        for p in pairs {
            w.serialize(p)?;
        }
        Ok(())
    })
}

/// Every stage in sequence inside `dir`.
pub fn run_all(config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = optimize_to(config, dir)?;
    let feats = features_to(config, dir)?;
    out.push(feats.clone());
    out.extend(experiment_to(config, &out[0].clone(), &feats, dir)?);
    Ok(out)
}
