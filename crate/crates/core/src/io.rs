//! CSV interchange between pipeline stages. Every file starts with a
//! `# rfclust <version> seed=<seed>` line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::de::PerformanceRecord;
use crate::ela::FeatureVector;
use crate::error::{Error, Result};
use crate::forest::RankedFeature;
use crate::key::InstanceKey;
use crate::suite::ProblemInstance;

pub const FLAG_PREFIX: &str = "flag:";

pub fn header_text(seed: u64) -> String {
    format!("{} seed={seed}", crate::generator())
}

pub fn header_line(seed: u64) -> String {
    format!("# {}\n", header_text(seed))
}

/// Writes `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// CSV text preceded by the header comment.
pub fn csv_string(seed: u64, fill: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w)?;
    let body = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(header_line(seed) + &String::from_utf8(body).expect("csv output is utf-8"))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    reader(path)?
        .deserialize()
        .map(|r| r.map_err(|e| Error::parse(path, e.to_string())))
        .collect()
}

/// The seed recorded in a file's header line, if any.
pub fn read_header_seed(path: &Path) -> Result<Option<u64>> {
    let text = read_text(path)?;
    Ok(text
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().find_map(|t| t.strip_prefix("seed=")))
        .and_then(|s| s.parse().ok()))
}

/// One row per instance: class metadata, the input shift and the output shift.
pub fn catalog_csv(suite: &str, instances: &[ProblemInstance], seed: u64) -> Result<String> {
    let dim = instances.first().map_or(0, ProblemInstance::dimension);
    csv_string(seed, |w| {
        let mut head: Vec<String> = ["suite", "class_id", "name", "dimension", "instance_id", "rotated"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        head.extend((1..=dim).map(|i| format!("xshift_{i}")));
        head.push("yshift".into());
        w.write_record(&head)?;
        for inst in instances {
            let c = &inst.class;
            let mut row = vec![
                suite.to_string(),
                c.class_id.to_string(),
                c.name.clone(),
                c.dimension.to_string(),
                inst.instance_id.to_string(),
                inst.rotation.is_some().to_string(),
            ];
            row.extend(inst.x_shift.iter().map(f64::to_string));
            row.push(inst.y_shift.to_string());
            w.write_record(&row)?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PerformanceRow {
    suite: String,
    class_id: u32,
    instance_id: u32,
    algorithm_id: String,
    median_precision: f64,
    log_median_precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunRow {
    suite: String,
    class_id: u32,
    instance_id: u32,
    algorithm_id: String,
    run_index: usize,
    precision: f64,
}

/// One row per (algorithm, instance) with the median precision and its log.
pub fn write_performance(path: &Path, records: &[PerformanceRecord], seed: u64) -> Result<()> {
    let text = csv_string(seed, |w| {
        for r in records {
            w.serialize(PerformanceRow {
                algorithm_id: r.algorithm_id.clone(),
                suite: r.suite.clone(),
                class_id: r.class_id,
                instance_id: r.instance_id,
                median_precision: r.median_precision,
                log_median_precision: r.log_median_precision,
            })?;
        }
        Ok(())
    })?;
    write_text(path, &text)
}

/// Aggregate records; `run_precisions` is left empty.
pub fn read_performance(path: &Path) -> Result<Vec<PerformanceRecord>> {
    Ok(records::<PerformanceRow>(path)?
        .into_iter()
        .map(|r| PerformanceRecord {
            algorithm_id: r.algorithm_id,
            suite: r.suite,
            class_id: r.class_id,
            instance_id: r.instance_id,
            run_precisions: Vec::new(),
            median_precision: r.median_precision,
            log_median_precision: r.log_median_precision,
        })
        .collect())
}

/// One row per run.
pub fn write_performance_runs(path: &Path, records: &[PerformanceRecord], seed: u64) -> Result<()> {
    let text = csv_string(seed, |w| {
        for r in records {
            for (run_index, &precision) in r.run_precisions.iter().enumerate() {
                w.serialize(RunRow {
                    algorithm_id: r.algorithm_id.clone(),
                    suite: r.suite.clone(),
                    class_id: r.class_id,
                    instance_id: r.instance_id,
                    run_index,
                    precision,
                })?;
            }
        }
        Ok(())
    })?;
    write_text(path, &text)
}

/// Rebuilds full records from per-run rows, in first-appearance order.
pub fn read_performance_runs(path: &Path) -> Result<Vec<PerformanceRecord>> {
    let mut out: Vec<(RunRow, Vec<f64>)> = Vec::new();
    for r in records::<RunRow>(path)? {
        let same = out.last().is_some_and(|(k, _)| {
            k.algorithm_id == r.algorithm_id && k.suite == r.suite && k.class_id == r.class_id && k.instance_id == r.instance_id
        });
        if same {
            out.last_mut().expect("checked").1.push(r.precision);
        } else {
            let p = r.precision;
            out.push((r, vec![p]));
        }
    }
    Ok(out
        .into_iter()
        .map(|(k, runs)| PerformanceRecord::from_runs(&k.algorithm_id, &k.suite, k.class_id, k.instance_id, runs))
        .collect())
}

/// Wide table: key columns, one column per feature, one `flag:` column per feature.
pub fn features_csv(vectors: &[FeatureVector], seed: u64) -> Result<String> {
    let names = vectors.first().map(|v| v.names.clone()).unwrap_or_default();
    csv_string(seed, |w| {
        let mut head = vec!["suite".to_string(), "class_id".into(), "instance_id".into()];
        head.extend(names.iter().cloned());
        head.extend(names.iter().map(|n| format!("{FLAG_PREFIX}{n}")));
        w.write_record(&head)?;
        for v in vectors {
            if v.names != names {
                return Err(Error::InvalidConfig(format!("feature vector {} has a different column set", v.key)));
            }
            let mut row = vec![v.key.suite.clone(), v.key.class_id.to_string(), v.key.instance_id.to_string()];
            row.extend(v.values.iter().map(|x| x.to_string()));
            row.extend(v.flags.iter().map(|f| if *f { "1" } else { "0" }.to_string()));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn write_features(path: &Path, vectors: &[FeatureVector], seed: u64) -> Result<()> {
    write_text(path, &features_csv(vectors, seed)?)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector>> {
    let mut rd = reader(path)?;
    let head: Vec<String> = rd
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if head.len() < 3 || head[0] != "suite" || head[1] != "class_id" || head[2] != "instance_id" {
        return Err(Error::parse(path, "expected suite,class_id,instance_id key columns"));
    }
    let names: Vec<String> = head[3..].iter().filter(|h| !h.starts_with(FLAG_PREFIX)).cloned().collect();
    let flag_pos: Vec<Option<usize>> = names
        .iter()
        .map(|n| head.iter().position(|h| *h == format!("{FLAG_PREFIX}{n}")))
        .collect();
    let value_pos: Vec<usize> = names
        .iter()
        .map(|n| head.iter().position(|h| h == n).expect("name taken from header"))
        .collect();
    let num = |s: &str, what: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::parse(path, format!("{what}: `{s}` is not a number")))
    };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let class_id = field(1)
            .parse()
            .map_err(|_| Error::parse(path, format!("bad class_id `{}`", field(1))))?;
        let instance_id = field(2)
            .parse()
            .map_err(|_| Error::parse(path, format!("bad instance_id `{}`", field(2))))?;
        let values = value_pos
            .iter()
            .zip(&names)
            .map(|(&i, n)| num(field(i), n))
            .collect::<Result<Vec<_>>>()?;
        let flags = flag_pos.iter().map(|p| p.is_some_and(|i| field(i).trim() == "1")).collect();
        out.push(FeatureVector {
            key: InstanceKey::new(field(0), class_id, instance_id),
            names: names.clone(),
            values,
            flags,
        });
    }
    Ok(out)
}

pub fn importance_csv(ranking: &[RankedFeature], seed: u64) -> Result<String> {
    csv_string(seed, |w| {
        for r in ranking {
            w.serialize(r)?;
        }
        Ok(())
    })
}

pub fn read_importance(path: &Path) -> Result<Vec<RankedFeature>> {
    records(path)
}
