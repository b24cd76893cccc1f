//! Benchmark problem classes and transformed instances with known optima.
//!
//! A [`ProblemClass`] is a base function on a box domain. A
//! [`ProblemInstance`] evaluates `f(R·(x − x_shift)) + y_shift`, so its
//! optimum location and value are known exactly and solution precision can
//! be computed without reference runs.

mod functions;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use functions::BaseFunction;

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_DIMENSION: usize = 10;
pub const DOMAIN: (f64, f64) = (-5.0, 5.0);
const Y_SHIFT_RANGE: f64 = 100.0;

/// Names accepted by [`suite_catalog`].
pub const SUITE_NAMES: [&str; 2] = ["classic12-single", "classic12-multi5"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemClass {
    pub class_id: u32,
    pub name: String,
    pub function: BaseFunction,
    pub dimension: usize,
    pub bounds: Vec<(f64, f64)>,
    pub optimum_location: Vec<f64>,
    pub optimum_value: f64,
    /// Draw a random rotation for instances other than 0.
    pub rotated: bool,
}

impl ProblemClass {
    pub fn new(class_id: u32, function: BaseFunction, dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        ProblemClass {
            class_id,
            name: function.name().to_string(),
            function,
            dimension,
            bounds: vec![DOMAIN; dimension],
            optimum_location: vec![0.0; dimension],
            optimum_value: 0.0,
            rotated: false,
        }
    }

    pub fn with_rotation(mut self, rotated: bool) -> Self {
        self.rotated = rotated;
        self
    }

    /// Untransformed objective.
    pub fn base_value(&self, z: &[f64]) -> f64 {
        self.function.eval(z)
    }
}

#[derive(Debug)]
pub struct ProblemInstance {
    pub class: ProblemClass,
    pub instance_id: u32,
    pub x_shift: Vec<f64>,
    pub y_shift: f64,
    /// Row-major `D×D` orthogonal matrix.
    pub rotation: Option<Vec<f64>>,
    evaluations: AtomicU64,
}

impl Clone for ProblemInstance {
    fn clone(&self) -> Self {
        ProblemInstance {
            class: self.class.clone(),
            instance_id: self.instance_id,
            x_shift: self.x_shift.clone(),
            y_shift: self.y_shift,
            rotation: self.rotation.clone(),
            evaluations: AtomicU64::new(self.evaluations()),
        }
    }
}

impl PartialEq for ProblemInstance {
    /// Compares the transform only, not the evaluation counter.
    fn eq(&self, other: &Self) -> bool {
        self.class == other.class
            && self.instance_id == other.instance_id
            && self.x_shift == other.x_shift
            && self.y_shift == other.y_shift
            && self.rotation == other.rotation
    }
}

impl ProblemInstance {
    /// Instance with an explicit transform; `rotation` must be orthogonal.
    pub fn from_parts(class: ProblemClass, instance_id: u32, x_shift: Vec<f64>, y_shift: f64, rotation: Option<Vec<f64>>) -> Result<Self> {
        let d = class.dimension;
        if x_shift.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x_shift.len(),
            });
        }
        if let Some(r) = &rotation {
            if r.len() != d * d {
                return Err(Error::DimensionMismatch {
                    expected: d * d,
                    got: r.len(),
                });
            }
        }
        Ok(ProblemInstance {
            class,
            instance_id,
            x_shift,
            y_shift,
            rotation,
            evaluations: AtomicU64::new(0),
        })
    }

    pub fn dimension(&self) -> usize {
        self.class.dimension
    }

    pub fn class_id(&self) -> u32 {
        self.class.class_id
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.class.bounds
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    /// Maps a decision vector into the base function's coordinates.
    fn to_base(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dimension();
        let shifted: Vec<f64> = x.iter().zip(&self.x_shift).map(|(a, s)| a - s).collect();
        match &self.rotation {
            None => shifted,
            Some(r) => (0..d).map(|i| (0..d).map(|j| r[i * d + j] * shifted[j]).sum()).collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let d = self.dimension();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        for (coordinate, (&value, &(lower, upper))) in x.iter().zip(self.bounds()).enumerate() {
            if !(lower..=upper).contains(&value) {
                return Err(Error::OutOfBounds {
                    coordinate,
                    value,
                    lower,
                    upper,
                });
            }
        }
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        Ok(self.class.base_value(&self.to_base(x)) + self.y_shift)
    }

    /// Location of the transformed optimum: `x_shift + Rᵀ·o`.
    pub fn optimum_location(&self) -> Vec<f64> {
        let d = self.dimension();
        let o = &self.class.optimum_location;
        match &self.rotation {
            None => self.x_shift.iter().zip(o).map(|(s, v)| s + v).collect(),
            Some(r) => (0..d)
                .map(|j| self.x_shift[j] + (0..d).map(|i| r[i * d + j] * o[i]).sum::<f64>())
                .collect(),
        }
    }

    pub fn optimum_value(&self) -> f64 {
        self.class.optimum_value + self.y_shift
    }

    /// Distance of `f_value` to the optimum value, clamped at zero.
    pub fn precision(&self, f_value: f64) -> f64 {
        (f_value - self.optimum_value()).max(0.0)
    }
}

/// Deterministic instance of `class`. Instance 0 is the identity transform;
/// others draw `x_shift` from the central half of the domain and `y_shift`
/// from `[-100, 100]`.
pub fn make_instance(class: &ProblemClass, instance_id: u32, seed: u64) -> ProblemInstance {
    let d = class.dimension;
    if instance_id == 0 {
        return ProblemInstance::from_parts(class.clone(), 0, vec![0.0; d], 0.0, None).expect("identity transform has matching dimension");
    }
    let mut rng = rng::stream_rng(&[seed, u64::from(class.class_id), u64::from(instance_id), rng::tag("instance")]);
    let x_shift: Vec<f64> = class
        .bounds
        .iter()
        .map(|&(lo, hi)| {
            let center = 0.5 * (lo + hi);
            let quarter = 0.25 * (hi - lo);
            rng.random_range(center - quarter..=center + quarter)
        })
        .collect();
    let y_shift = rng.random_range(-Y_SHIFT_RANGE..=Y_SHIFT_RANGE);
    let rotation = class.rotated.then(|| random_rotation(d, &mut rng));
    ProblemInstance::from_parts(class.clone(), instance_id, x_shift, y_shift, rotation).expect("generated transform has matching dimension")
}

/// Orthogonal matrix from Gram-Schmidt on a Gaussian matrix (row-major).
fn random_rotation(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for u in &rows {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            rows.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    rows.concat()
}

fn instance_ids(suite_name: &str) -> Result<Vec<u32>> {
    match suite_name {
        "classic12-single" => Ok(vec![1]),
        "classic12-multi5" => Ok((1..=5).collect()),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

/// Problem classes of a named suite, ids `1..=12` in [`BaseFunction::ALL`] order.
pub fn suite_catalog(suite_name: &str, dimension: usize) -> Result<Vec<ProblemClass>> {
    instance_ids(suite_name)?;
    if dimension == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    Ok(BaseFunction::ALL
        .iter()
        .enumerate()
        .map(|(i, &f)| ProblemClass::new(i as u32 + 1, f, dimension))
        .collect())
}

/// All instances of a named suite, ordered by (class_id, instance_id).
pub fn suite_instances(suite_name: &str, dimension: usize, seed: u64) -> Result<Vec<ProblemInstance>> {
    let ids = instance_ids(suite_name)?;
    let classes = suite_catalog(suite_name, dimension)?;
    Ok(classes
        .iter()
        .flat_map(|c| ids.iter().map(move |&i| make_instance(c, i, seed)))
        .collect())
}
