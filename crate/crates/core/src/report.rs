//! Rendering of an experiment bundle into heatmap, comparison, summary and
//! diagnostic tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{csv_string, header_line, header_text, importance_csv, write_text};
use crate::lopo::{ExperimentBundle, PortfolioResult};

/// Feature values are the median over sampling repetitions, which is the
/// aggregation reported in the MAE summary.
pub const FEATURE_AGGREGATION: &str = "median";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Markdown,
}

/// Checks that every configured algorithm, portfolio, threshold and class
/// is present exactly once.
pub fn validate_bundle(bundle: &ExperimentBundle) -> Result<()> {
    let cfg = &bundle.config;
    if bundle.algorithms.len() != cfg.algorithms.len() {
        return Err(Error::IncompleteBundle(format!(
            "{} algorithm results for {} configured algorithms",
            bundle.algorithms.len(),
            cfg.algorithms.len()
        )));
    }
    for (spec, alg) in cfg.algorithms.iter().zip(&bundle.algorithms) {
        if spec.id != alg.algorithm_id {
            return Err(Error::IncompleteBundle(format!("algorithm {}", spec.id)));
        }
        if alg.portfolios.len() != cfg.portfolios.len() || cfg.portfolios.iter().zip(&alg.portfolios).any(|(s, p)| *s != p.size) {
            return Err(Error::IncompleteBundle(format!("portfolio list for {}", alg.algorithm_id)));
        }
        for p in &alg.portfolios {
            let classes: BTreeSet<u32> = p.folds.iter().map(|f| f.held_out_class).collect();
            if classes.len() != p.folds.len() || classes.is_empty() {
                return Err(Error::IncompleteBundle(format!("folds of {} top{}", alg.algorithm_id, p.size)));
            }
            for f in &p.folds {
                for &t in &cfg.thresholds {
                    if f.outcomes.iter().filter(|o| o.threshold == t).count() != 1 {
                        return Err(Error::IncompleteBundle(format!(
                            "{} top{} class {} threshold {t}",
                            alg.algorithm_id, p.size, f.held_out_class
                        )));
                    }
                }
            }
            for &t in &cfg.thresholds {
                if !p.comparisons.iter().any(|c| c.threshold == t) {
                    return Err(Error::IncompleteBundle(format!(
                        "comparison {} top{} threshold {t}",
                        alg.algorithm_id, p.size
                    )));
                }
            }
            if p.diagnostics.iter().map(|d| d.class_id).collect::<BTreeSet<_>>() != classes {
                return Err(Error::IncompleteBundle(format!(
                    "diagnostics of {} top{}",
                    alg.algorithm_id, p.size
                )));
            }
        }
    }
    Ok(())
}

fn model_label(threshold: Option<f64>) -> String {
    match threshold {
        None => "RF".to_string(),
        Some(t) => format!("RF+clust@{t}"),
    }
}

fn class_ids(p: &PortfolioResult) -> Vec<u32> {
    p.folds.iter().map(|f| f.held_out_class).collect()
}

/// Heatmap rows of one portfolio: label and one value per class.
fn error_rows(p: &PortfolioResult, thresholds: &[f64]) -> Vec<(String, Vec<f64>)> {
    let mut rows = vec![(model_label(None), p.folds.iter().map(|f| f.rf_mae()).collect())];
    for &t in thresholds {
        let cells = p.folds.iter().map(|f| f.rfclust_mae(t).expect("validated")).collect();
        rows.push((model_label(Some(t)), cells));
    }
    rows
}

fn neighbor_rows(p: &PortfolioResult, thresholds: &[f64]) -> Vec<(String, Vec<usize>)> {
    thresholds
        .iter()
        .map(|&t| {
            let cells = p
                .folds
                .iter()
                .map(|f| f.outcome(t).expect("validated").neighbor_counts.iter().sum())
                .collect();
            (model_label(Some(t)), cells)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SummaryRow<'a> {
    algorithm_id: &'a str,
    top_features: usize,
    aggregation: &'a str,
    mae_train: f64,
    mae_test: f64,
}

fn summary_rows(bundle: &ExperimentBundle) -> Vec<SummaryRow<'_>> {
    bundle
        .algorithms
        .iter()
        .flat_map(|a| {
            a.portfolios.iter().map(move |p| SummaryRow {
                algorithm_id: &a.algorithm_id,
                top_features: p.size,
                aggregation: FEATURE_AGGREGATION,
                mae_train: p.mae_train,
                mae_test: p.mae_test,
            })
        })
        .collect()
}

/// Union of class ids over every portfolio, in order.
fn all_classes(bundle: &ExperimentBundle) -> Vec<u32> {
    bundle
        .algorithms
        .iter()
        .flat_map(|a| a.portfolios.iter().flat_map(class_ids))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn errors_heatmap_csv(bundle: &ExperimentBundle, seed: u64) -> Result<String> {
    let thresholds = &bundle.config.thresholds;
    csv_string(seed, |w| {
        let mut head = vec!["algorithm_id".to_string(), "portfolio".into(), "model".into()];
        head.extend(all_classes(bundle).iter().map(|c| c.to_string()));
        w.write_record(&head)?;
        for a in &bundle.algorithms {
            for p in &a.portfolios {
                for (label, cells) in error_rows(p, thresholds) {
                    let mut row = vec![a.algorithm_id.clone(), p.size.to_string(), label];
                    row.extend(cells.iter().map(|v| v.to_string()));
                    w.write_record(&row)?;
                }
            }
        }
        Ok(())
    })
}

fn neighbors_heatmap_csv(bundle: &ExperimentBundle, seed: u64) -> Result<String> {
    let thresholds = &bundle.config.thresholds;
    csv_string(seed, |w| {
        let mut head = vec!["algorithm_id".to_string(), "portfolio".into(), "model".into()];
        head.extend(all_classes(bundle).iter().map(|c| c.to_string()));
        w.write_record(&head)?;
        for a in &bundle.algorithms {
            for p in &a.portfolios {
                for (label, cells) in neighbor_rows(p, thresholds) {
                    let mut row = vec![a.algorithm_id.clone(), p.size.to_string(), label];
                    row.extend(cells.iter().map(|v| v.to_string()));
                    w.write_record(&row)?;
                }
            }
        }
        Ok(())
    })
}

fn comparison_csv(bundle: &ExperimentBundle, seed: u64) -> Result<String> {
    csv_string(seed, |w| {
        w.write_record(["algorithm_id", "threshold", "portfolio", "n_better", "n_equal", "n_worse"])?;
        for a in &bundle.algorithms {
            for p in &a.portfolios {
                for c in &p.comparisons {
                    w.write_record([
                        c.algorithm_id.clone(),
                        c.threshold.to_string(),
                        c.portfolio.to_string(),
                        c.n_better.to_string(),
                        c.n_equal.to_string(),
                        c.n_worse.to_string(),
                    ])?;
                }
            }
        }
        Ok(())
    })
}

fn summary_csv(bundle: &ExperimentBundle, seed: u64) -> Result<String> {
    csv_string(seed, |w| {
        for r in summary_rows(bundle) {
            w.serialize(r)?;
        }
        Ok(())
    })
}

fn diagnostics_csv(bundle: &ExperimentBundle, class_id: u32, seed: u64) -> Result<String> {
    csv_string(seed, |w| {
        w.write_record([
            "algorithm_id",
            "portfolio",
            "focus_instance",
            "other_class",
            "other_instance",
            "similarity",
            "performance_gap",
        ])?;
        for a in &bundle.algorithms {
            for p in &a.portfolios {
                for d in p.diagnostics.iter().filter(|d| d.class_id == class_id) {
                    for q in &d.pairs {
                        w.write_record([
                            a.algorithm_id.clone(),
                            p.size.to_string(),
                            q.focus_instance.to_string(),
                            q.other_class.to_string(),
                            q.other_instance.to_string(),
                            q.similarity.to_string(),
                            q.performance_gap.to_string(),
                        ])?;
                    }
                }
            }
        }
        Ok(())
    })
}

/// One JSON object per (algorithm, portfolio, threshold, held-out instance).
fn queries_jsonl(bundle: &ExperimentBundle, seed: u64) -> Result<String> {
    let mut out = header_line(seed);
    for a in &bundle.algorithms {
        for p in &a.portfolios {
            for f in &p.folds {
                for o in &f.outcomes {
                    for (i, key) in f.test_keys.iter().enumerate() {
                        let c = &o.calibrated[i];
                        let line = json!({
                            "algorithm_id": a.algorithm_id,
                            "portfolio": p.size,
                            "suite": key.suite,
                            "class_id": key.class_id,
                            "instance_id": key.instance_id,
                            "threshold": o.threshold,
                            "k": c.neighbor_count,
                            "neighbors": o.neighbors[i],
                            "raw": c.raw_prediction,
                            "aggregated": c.aggregated_neighbor_value,
                            "final": c.final_prediction,
                            "target": f.targets[i],
                        });
                        out.push_str(&serde_json::to_string(&line)?);
                        out.push('\n');
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Configuration echo and seeds.
pub fn experiment_json(bundle: &ExperimentBundle) -> Result<String> {
    let cfg = &bundle.config;
    let v = json!({
        "generator": header_text(cfg.master_seed),
        "master_seed": cfg.master_seed,
        "seeds": {
            "instances": cfg.instance_seed(),
            "optimize": cfg.optimize_seed(),
            "features": cfg.features_seed(),
            "experiment": bundle.experiment_seed,
        },
        "config": cfg,
        "grid_size": cfg.grid().len(),
        "portfolios": bundle.algorithms.iter().map(|a| json!({
            "algorithm_id": a.algorithm_id,
            "features": a.portfolios.iter().map(|p| json!({"size": p.size, "features": p.features})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn bundle_json(bundle: &ExperimentBundle) -> Result<String> {
    Ok(serde_json::to_string(bundle)? + "\n")
}

pub fn read_bundle(path: &Path) -> Result<ExperimentBundle> {
    let text = crate::io::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

fn md_table(out: &mut String, head: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", head.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn markdown(bundle: &ExperimentBundle, seed: u64) -> String {
    let thresholds = &bundle.config.thresholds;
    let mut out = format!("<!-- {} -->\n# Experiment report\n\n## MAE summary\n\n", header_text(seed));
    let rows: Vec<Vec<String>> = summary_rows(bundle)
        .into_iter()
        .map(|r| {
            vec![
                r.algorithm_id.to_string(),
                r.top_features.to_string(),
                r.aggregation.to_string(),
                r.mae_train.to_string(),
                r.mae_test.to_string(),
            ]
        })
        .collect();
    let head: Vec<String> = ["algorithm_id", "top_features", "aggregation", "mae_train", "mae_test"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    md_table(&mut out, &head, &rows);

    out.push_str("## Comparison with the forest\n\n");
    let head: Vec<String> = ["algorithm_id", "threshold", "portfolio", "n_better", "n_equal", "n_worse"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = bundle
        .algorithms
        .iter()
        .flat_map(|a| a.portfolios.iter().flat_map(|p| p.comparisons.iter()))
        .map(|c| {
            vec![
                c.algorithm_id.clone(),
                c.threshold.to_string(),
                c.portfolio.to_string(),
                c.n_better.to_string(),
                c.n_equal.to_string(),
                c.n_worse.to_string(),
            ]
        })
        .collect();
    md_table(&mut out, &head, &rows);

    for a in &bundle.algorithms {
        for p in &a.portfolios {
            let _ = writeln!(out, "## {} top {}: MAE per held-out class\n", a.algorithm_id, p.size);
            let mut head = vec!["model".to_string()];
            head.extend(class_ids(p).iter().map(|c| c.to_string()));
            let rows: Vec<Vec<String>> = error_rows(p, thresholds)
                .into_iter()
                .map(|(label, cells)| std::iter::once(label).chain(cells.iter().map(|v| v.to_string())).collect())
                .collect();
            md_table(&mut out, &head, &rows);
            if !thresholds.is_empty() {
                let _ = writeln!(out, "## {} top {}: neighbour counts\n", a.algorithm_id, p.size);
                let rows: Vec<Vec<String>> = neighbor_rows(p, thresholds)
                    .into_iter()
                    .map(|(label, cells)| std::iter::once(label).chain(cells.iter().map(|v| v.to_string())).collect())
                    .collect();
                md_table(&mut out, &head, &rows);
            }
        }
    }
    out
}

/// Writes the report files into `dir` and returns their paths in write order.
pub fn render(bundle: &ExperimentBundle, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    validate_bundle(bundle)?;
    let seed = bundle.config.master_seed;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    match format {
        Format::Csv => {
            files.push((dir.join("errors_heatmap.csv"), errors_heatmap_csv(bundle, seed)?));
            files.push((dir.join("neighbors_heatmap.csv"), neighbors_heatmap_csv(bundle, seed)?));
            files.push((dir.join("comparison.csv"), comparison_csv(bundle, seed)?));
            files.push((dir.join("mae_summary.csv"), summary_csv(bundle, seed)?));
            for c in all_classes(bundle) {
                files.push((dir.join(format!("diagnostics_{c}.csv")), diagnostics_csv(bundle, c, seed)?));
            }
            for a in &bundle.algorithms {
                files.push((
                    dir.join(format!("importance_{}.csv", a.algorithm_id)),
                    importance_csv(&a.ranking, seed)?,
                ));
            }
            files.push((dir.join("queries.jsonl"), queries_jsonl(bundle, seed)?));
        }
        Format::Markdown => files.push((dir.join("report.md"), markdown(bundle, seed))),
    }
    for (p, text) in &files {
        write_text(p, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// `experiment.json` and `bundle.json` followed by the CSV report.
pub fn write_experiment(bundle: &ExperimentBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    validate_bundle(bundle)?;
    let exp = dir.join("experiment.json");
    let full = dir.join("bundle.json");
    write_text(&exp, &experiment_json(bundle)?)?;
    write_text(&full, &bundle_json(bundle)?)?;
    let mut out = vec![exp, full];
    out.extend(render(bundle, Format::Csv, dir)?);
    Ok(out)
}
