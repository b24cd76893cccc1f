//! Exploratory landscape analysis: per-instance feature vectors computed from
//! Latin hypercube samples of the decision space.
//!
//! Six groups are computed (y-distribution, meta-model, dispersion,
//! information content, nearest-better clustering, PCA). Degenerate
//! statistics never yield NaN; they produce a fixed sentinel value and set a
//! per-feature flag that travels with the vector.

mod disp;
mod distr;
mod ic;
mod meta;
mod nbc;
mod pca;
mod sampling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use disp::{feature_group_disp, DispFeatures, DispQuantile, DEFAULT_QUANTILES};
pub use distr::{feature_group_distr, DistrFeatures};
pub use ic::{epsilon_grid, feature_group_ic, information_content, nearest_neighbor_tour, partial_information, IcFeatures, EPS_ZERO_LOG10};
pub use meta::{feature_group_meta, MetaFeatures};
pub use nbc::{feature_group_nbc, nn_and_nb_distances, NbcFeatures};
pub use pca::{feature_group_pca, PcaFeatures};
pub use sampling::{lhs_sample, min_pairwise_distance, Sampler, IMPROVED_LHS_CANDIDATES};

use crate::error::{Error, Result};
use crate::key::InstanceKey;
use crate::rng;
use crate::stats;
use crate::suite::ProblemInstance;

/// Evaluated design: `n` points of dimension `dim` (row-major) and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Sample {
    pub fn new(rows: &[Vec<f64>], y: Vec<f64>) -> Self {
        assert_eq!(rows.len(), y.len(), "one objective value per row");
        let dim = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == dim), "ragged sample");
        Sample { dim, x: rows.concat(), y }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn with_y(&self, y: Vec<f64>) -> Sample {
        assert_eq!(y.len(), self.n());
        Sample {
            dim: self.dim,
            x: self.x.clone(),
            y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub value: f64,
    pub flagged: bool,
}

impl Feature {
    pub fn new(name: impl Into<String>, value: f64, flagged: bool) -> Self {
        Feature {
            name: name.into(),
            value,
            flagged,
        }
    }
}

/// Features that move under a positive rescaling of the objective; every
/// other feature is invariant to it.
pub const SCALE_DEPENDENT: [&str; 5] = [
    "meta.lin_intercept",
    "meta.lin_coef_min",
    "meta.lin_coef_max",
    "pca.expl_var_cov_init",
    "pca.expl_var_pc1_cov_init",
];

/// The only feature that moves under a shift of the objective.
pub const SHIFT_DEPENDENT: [&str; 1] = ["meta.lin_intercept"];

/// All feature groups on one sample, in canonical order.
pub fn sample_features(sample: &Sample) -> Vec<Feature> {
    let mut out = feature_group_distr(sample.y()).features();
    out.extend(feature_group_meta(sample).features());
    out.extend(feature_group_disp(sample, &DEFAULT_QUANTILES).features());
    out.extend(feature_group_ic(sample).features());
    out.extend(feature_group_nbc(sample).features());
    out.extend(feature_group_pca(sample).features());
    out
}

/// Names produced by [`sample_features`], in order.
pub fn feature_names() -> Vec<String> {
    let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
    let y = (0..8).map(|i| i as f64).collect();
    sample_features(&Sample::new(&rows, y)).into_iter().map(|f| f.name).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDesign {
    pub sample_size: usize,
    pub repetitions: usize,
    pub sampler: Sampler,
    pub seed: u64,
}

impl SampleDesign {
    /// `sample_factor · dimension` points per repetition.
    pub fn scaled(sample_factor: usize, dimension: usize, repetitions: usize, sampler: Sampler, seed: u64) -> Self {
        SampleDesign {
            sample_size: sample_factor * dimension,
            repetitions,
            sampler,
            seed,
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if self.sample_size < 4 * dimension {
            return Err(Error::InvalidConfig(format!(
                "sample size {} is below 4·D = {}",
                self.sample_size,
                4 * dimension
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub key: InstanceKey,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// `flags[i]` is set when `values[i]` is a sentinel in any repetition.
    pub flags: Vec<bool>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn is_flagged(&self, name: &str) -> Option<bool> {
        self.names.iter().position(|n| n == name).map(|i| self.flags[i])
    }

    /// Values in the order of `names`, failing on the first absent one.
    pub fn select(&self, names: &[String]) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| self.get(n).ok_or_else(|| Error::MissingFeature(n.clone())))
            .collect()
    }
}

/// Samples `instance` once with the given stream and computes every group.
pub fn features_for_repetition(instance: &ProblemInstance, design: &SampleDesign, repetition: usize) -> Result<Vec<Feature>> {
    let mut rng = rng::stream_rng(&[
        design.seed,
        u64::from(instance.class_id()),
        u64::from(instance.instance_id),
        repetition as u64,
        rng::tag("ela"),
    ]);
    let rows = lhs_sample(design.sample_size, instance.bounds(), design.sampler, &mut rng);
    let y = rows.iter().map(|r| instance.evaluate(r)).collect::<Result<Vec<f64>>>()?;
    Ok(sample_features(&Sample::new(&rows, y)))
}

/// Per-feature median over `design.repetitions` independent samples.
pub fn compute_features(suite: &str, instance: &ProblemInstance, design: &SampleDesign) -> Result<FeatureVector> {
    design.validate(instance.dimension())?;
    let reps = (0..design.repetitions)
        .into_par_iter()
        .map(|r| features_for_repetition(instance, design, r))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = reps[0].iter().map(|f| f.name.clone()).collect();
    let values = (0..names.len())
        .map(|i| stats::median(&reps.iter().map(|r| r[i].value).collect::<Vec<_>>()))
        .collect();
    let flags = (0..names.len()).map(|i| reps.iter().any(|r| r[i].flagged)).collect();
    Ok(FeatureVector {
        key: InstanceKey::new(suite, instance.class_id(), instance.instance_id),
        names,
        values,
        flags,
    })
}

/// Feature vectors for many instances, sorted by key.
pub fn compute_all_features(suite: &str, instances: &[ProblemInstance], design: &SampleDesign) -> Result<Vec<FeatureVector>> {
    let mut out = instances
        .par_iter()
        .map(|inst| compute_features(suite, inst, design))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{make_instance, BaseFunction, ProblemClass};

    #[test]
    fn names_are_unique_and_complete() {
        let names = feature_names();
        assert_eq!(names.len(), 44);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn single_repetition_equals_raw_features() {
        let inst = make_instance(&ProblemClass::new(3, BaseFunction::Rastrigin, 3), 1, 9);
        let design = SampleDesign::scaled(50, 3, 1, Sampler::Lhs, 4);
        let fv = compute_features("s", &inst, &design).unwrap();
        let raw = features_for_repetition(&inst, &design, 0).unwrap();
        assert_eq!(fv.values, raw.iter().map(|f| f.value).collect::<Vec<_>>());
        assert!(fv.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn deterministic_vectors() {
        let inst = make_instance(&ProblemClass::new(1, BaseFunction::Ackley, 2), 2, 9);
        let design = SampleDesign::scaled(40, 2, 3, Sampler::ImprovedLhs, 5);
        assert_eq!(
            compute_features("s", &inst, &design).unwrap(),
            compute_features("s", &inst, &design).unwrap()
        );
    }

    #[test]
    fn design_validation() {
        let design = SampleDesign::scaled(3, 10, 1, Sampler::Lhs, 0);
        assert!(design.validate(10).is_err());
    }
}
