use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfclust::de::PerformanceRecord;
use rfclust::ela::FeatureVector;
use rfclust::forest::{HyperParams, MaxFeatures};
use rfclust::lopo::{run_experiment, ExperimentBundle};
use rfclust::report::{read_bundle, render, validate_bundle, write_experiment, Format};
use rfclust::{Error, ExperimentConfig, InstanceKey};

fn records(seed: u64) -> (Vec<PerformanceRecord>, Vec<FeatureVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..5).map(|i| format!("f{i}")).collect();
    let mut perf = Vec::new();
    let mut feats = Vec::new();
    for c in 1..=4u32 {
        for i in 1..=3u32 {
            feats.push(FeatureVector {
                key: InstanceKey::new("synthetic", c, i),
                names: names.clone(),
                values: (0..5).map(|_| rng.random_range(-2.0..2.0)).collect(),
                flags: vec![false; 5],
            });
            for alg in ["de1", "de2"] {
                let runs = (0..3).map(|_| 10f64.powf(rng.random_range(-8.0..1.0))).collect();
                perf.push(PerformanceRecord::from_runs(alg, "synthetic", c, i, runs));
            }
        }
    }
    (perf, feats)
}

fn config(thresholds: Vec<f64>) -> ExperimentConfig {
    let base = ExperimentConfig::default();
    ExperimentConfig {
        algorithms: base.algorithms.into_iter().take(2).collect(),
        thresholds,
        portfolios: vec![2, 5],
        importance_repeats: 2,
        grid: Some(vec![HyperParams {
            n_estimators: 5,
            max_features: MaxFeatures::All,
            max_depth: 3,
            min_samples_split: 2,
        }]),
        ..base
    }
}

fn bundle(thresholds: Vec<f64>) -> ExperimentBundle {
    let (perf, feats) = records(3);
    run_experiment(&perf, &feats, &config(thresholds)).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

/// Heatmap values keyed by (algorithm, portfolio, model), from the CSV.
fn csv_heatmap(text: &str) -> BTreeMap<(String, String, String), Vec<f64>> {
    data_lines(text)
        .into_iter()
        .skip(1)
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            let values = cells[3..].iter().map(|v| v.parse().unwrap()).collect();
            ((cells[0].to_string(), cells[1].to_string(), cells[2].to_string()), values)
        })
        .collect()
}

/// The same values from the MAE sections of the markdown report.
fn markdown_heatmap(text: &str) -> BTreeMap<(String, String, String), Vec<f64>> {
    let mut out = BTreeMap::new();
    let mut section: Option<(String, String)> = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("## ") {
            section = rest.strip_suffix(": MAE per held-out class").map(|s| {
                let (alg, top) = s.split_once(" top ").unwrap();
                (alg.to_string(), top.to_string())
            });
            continue;
        }
        let Some((alg, top)) = &section else { continue };
        if !line.starts_with("| RF") {
            continue;
        }
        let cells: Vec<&str> = line.trim_matches('|').split('|').map(str::trim).collect();
        let values = cells[1..].iter().map(|v| v.parse().unwrap()).collect();
        out.insert((alg.clone(), top.clone(), cells[0].to_string()), values);
    }
    out
}

#[test]
fn csv_and_markdown_carry_the_same_numbers() {
    let b = bundle(vec![0.5, 0.9]);
    let csv_dir = tempfile::tempdir().unwrap();
    let md_dir = tempfile::tempdir().unwrap();
    render(&b, Format::Csv, csv_dir.path()).unwrap();
    render(&b, Format::Markdown, md_dir.path()).unwrap();
    let csv = csv_heatmap(&std::fs::read_to_string(csv_dir.path().join("errors_heatmap.csv")).unwrap());
    let md = markdown_heatmap(&std::fs::read_to_string(md_dir.path().join("report.md")).unwrap());
    assert_eq!(csv.len(), 2 * 2 * 3);
    assert_eq!(csv, md);
}

#[test]
fn empty_threshold_list_keeps_only_the_forest_rows() {
    let b = bundle(Vec::new());
    let dir = tempfile::tempdir().unwrap();
    render(&b, Format::Csv, dir.path()).unwrap();
    let heat = csv_heatmap(&std::fs::read_to_string(dir.path().join("errors_heatmap.csv")).unwrap());
    assert_eq!(heat.len(), 4);
    assert!(heat.keys().all(|(_, _, model)| model == "RF"));
    let cmp = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(data_lines(&cmp).len(), 1);
}

#[test]
fn incomplete_bundle_names_the_missing_piece() {
    let mut b = bundle(vec![0.7]);
    b.algorithms[1].portfolios[0].folds[2].outcomes.clear();
    let dir = tempfile::tempdir().unwrap();
    match render(&b, Format::Csv, dir.path()) {
        Err(Error::IncompleteBundle(what)) => {
            assert!(what.contains("de2"), "{what}");
            assert!(what.contains("0.7"), "{what}");
        }
        other => panic!("expected an incomplete bundle error, got {other:?}"),
    }
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn stored_bundle_renders_identically() {
    let b = bundle(vec![0.5]);
    let first = tempfile::tempdir().unwrap();
    write_experiment(&b, first.path()).unwrap();
    let restored = read_bundle(&first.path().join("bundle.json")).unwrap();
    validate_bundle(&restored).unwrap();
    let second = tempfile::tempdir().unwrap();
    render(&restored, Format::Csv, second.path()).unwrap();
    for name in ["errors_heatmap.csv", "comparison.csv", "mae_summary.csv", "queries.jsonl"] {
        assert_eq!(
            std::fs::read_to_string(first.path().join(name)).unwrap(),
            std::fs::read_to_string(second.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn every_output_starts_with_the_generator_header() {
    let b = bundle(vec![0.5]);
    let dir = tempfile::tempdir().unwrap();
    for path in write_experiment(&b, dir.path()).unwrap() {
        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        let ok = first.starts_with("# rfclust ") || first.contains("\"generator\"") || first == "{";
        assert!(ok, "{}: {first}", path.display());
        assert!(text.contains(&format!("seed={}", b.config.master_seed)), "{}", path.display());
    }
}
