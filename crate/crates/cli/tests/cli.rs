use std::path::Path;
use std::process::{Command, Output};

fn rfclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfclust"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    let cfg = serde_json::json!({
        "suite": "classic12-single",
        "dimension": 7,
        "algorithms": [{"id": "de1", "strategy": "Best3Bin", "f": 0.533, "cr": 0.809}],
        "budget_factor": 20,
        "runs": 3,
        "sample_factor": 30,
        "repetitions": 1,
        "thresholds": [0.5, 0.9],
        "portfolios": [4],
        "importance_repeats": 2,
        "grid": [{"n_estimators": 5, "max_features": "all", "max_depth": 3, "min_samples_split": 2}],
        "master_seed": 3
    });
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let o = rfclust(&["suite", "list", "--name", "nope"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = rfclust(&["optimize", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_jobs_is_a_usage_error() {
    let o = rfclust(&["--jobs", "0", "suite", "list"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn suite_list_prints_the_catalogue() {
    let o = rfclust(&["suite", "list", "--name", "classic12-single", "--dimension", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("# rfclust "));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 13);
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let o = rfclust(&[
        "experiment",
        "--performance",
        missing.to_str().unwrap(),
        "--features",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.csv"), "{}", stderr(&o));
}

#[test]
fn staged_pipeline_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = small_config(dir.path());
    for args in [
        vec!["--config", &cfg, "optimize", "--out", d],
        vec!["--config", &cfg, "features", "--out", d],
    ] {
        let o = rfclust(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
    let perf = dir.path().join("performance.csv");
    let feats = dir.path().join("features.csv");
    let out = dir.path().join("results");
    let o = rfclust(&[
        "--config",
        &cfg,
        "experiment",
        "--performance",
        perf.to_str().unwrap(),
        "--features",
        feats.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in [
        "experiment.json",
        "bundle.json",
        "errors_heatmap.csv",
        "neighbors_heatmap.csv",
        "comparison.csv",
        "mae_summary.csv",
        "importance_de1.csv",
        "queries.jsonl",
        "diagnostics_1.csv",
        "diagnostics_12.csv",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let cmp = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(cmp.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let md = dir.path().join("md");
    let o = rfclust(&[
        "report",
        "--bundle",
        out.join("bundle.json").to_str().unwrap(),
        "--format",
        "markdown",
        "--out",
        md.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(md.join("report.md").is_file());

    let diag = dir.path().join("diag.csv");
    let o = rfclust(&[
        "--config",
        &cfg,
        "diagnose",
        "--performance",
        perf.to_str().unwrap(),
        "--features",
        feats.to_str().unwrap(),
        "--algorithm",
        "de1",
        "--class",
        "3",
        "--importance",
        out.join("importance_de1.csv").to_str().unwrap(),
        "--top",
        "4",
        "--out",
        diag.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&diag).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 1 + 11);
}

#[test]
fn flag_only_stages_write_named_files() {
    let dir = tempfile::tempdir().unwrap();
    let perf = dir.path().join("out/perf.csv");
    let o = rfclust(&[
        "optimize",
        "--suite",
        "classic12-single",
        "--dimension",
        "8",
        "--algs",
        "de1,de2",
        "--budget-factor",
        "10",
        "--runs",
        "2",
        "--seed",
        "4",
        "--out",
        perf.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&perf).unwrap();
    assert!(text.starts_with("# rfclust 0.1.0 seed=4\nsuite,class_id,instance_id,algorithm_id,median_precision,log_median_precision\n"));
    assert_eq!(text.lines().count(), 2 + 2 * 12);
    let runs = std::fs::read_to_string(dir.path().join("out/perf_runs.csv")).unwrap();
    assert!(runs.lines().nth(1).unwrap().ends_with("run_index,precision"));
    assert_eq!(runs.lines().count(), 2 + 2 * 12 * 2);

    let feats = dir.path().join("out/feats.csv");
    let o = rfclust(&[
        "features",
        "--suite",
        "classic12-single",
        "--dimension",
        "8",
        "--sample-factor",
        "30",
        "--reps",
        "1",
        "--sampler",
        "lhs",
        "--out",
        feats.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&feats).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("suite,class_id,instance_id,"));
    assert_eq!(text.lines().count(), 2 + 12);
}

#[test]
fn catalogue_lists_instances_with_shifts() {
    let o = rfclust(&["suite", "list", "--name", "classic12-multi5", "--dimension", "2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let mut lines = out.lines().skip(1);
    assert_eq!(
        lines.next().unwrap(),
        "suite,class_id,name,dimension,instance_id,rotated,xshift_1,xshift_2,yshift"
    );
    assert_eq!(lines.count(), 60);
}
