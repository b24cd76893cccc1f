//! Fixed-budget Differential Evolution used to produce performance targets.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;
use crate::suite::ProblemInstance;

/// Precision floor applied before taking log10.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Best1Bin,
    Best3Bin,
    /// Random base vector, 1 to 3 difference pairs drawn per mutation.
    RandRandBin,
}

impl Strategy {
    /// Donors needed per mutation in the worst case (base vector included
    /// when it is drawn from the population).
    fn max_donors(self) -> usize {
        match self {
            Strategy::Best1Bin => 2,
            Strategy::Best3Bin => 6,
            Strategy::RandRandBin => 7,
        }
    }

    /// Smallest population able to serve every mutation.
    pub fn min_population(self) -> usize {
        (self.max_donors() + 1).max(4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    pub algorithm_id: String,
    pub strategy: Strategy,
    pub f: f64,
    pub cr: f64,
    pub population_size: usize,
    pub budget: usize,
    pub runs: usize,
    pub seed: u64,
}

/// Strategy, F and Cr of the three named configurations.
pub fn preset(algorithm_id: &str) -> Result<(Strategy, f64, f64)> {
    match algorithm_id {
        "de1" => Ok((Strategy::Best3Bin, 0.533, 0.809)),
        "de2" => Ok((Strategy::Best1Bin, 0.617, 0.514)),
        "de3" => Ok((Strategy::RandRandBin, 0.516, 0.686)),
        other => Err(Error::UnknownAlgorithm(other.to_string())),
    }
}

impl DEConfig {
    /// Named preset with population `D` and budget `budget_factor · D`.
    pub fn from_preset(algorithm_id: &str, dimension: usize, budget_factor: usize, runs: usize, seed: u64) -> Result<Self> {
        let (strategy, f, cr) = preset(algorithm_id)?;
        let cfg = DEConfig {
            algorithm_id: algorithm_id.to_string(),
            strategy,
            f,
            cr,
            population_size: dimension,
            budget: budget_factor * dimension,
            runs,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let min_pop = self.strategy.min_population();
        if self.population_size < min_pop {
            return Err(Error::PopulationTooSmall {
                population: self.population_size,
                required: min_pop,
            });
        }
        if self.budget < self.population_size {
            return Err(Error::InvalidConfig(format!(
                "budget {} is smaller than the population {}",
                self.budget, self.population_size
            )));
        }
        if !(0.0..=2.0).contains(&self.f) {
            return Err(Error::InvalidConfig(format!("F = {} outside [0, 2]", self.f)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::InvalidConfig(format!("Cr = {} outside [0, 1]", self.cr)));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be positive".into()));
        }
        Ok(())
    }
}

/// `count` distinct population indices, none equal to `exclude`.
fn distinct_donors(pop: usize, exclude: usize, count: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if pop < count + 1 {
        return Err(Error::PopulationTooSmall {
            population: pop,
            required: count + 1,
        });
    }
    Ok(index::sample(rng, pop - 1, count)
        .into_iter()
        .map(|i| if i >= exclude { i + 1 } else { i })
        .collect())
}

fn add_differences(base: &[f64], population: &[Vec<f64>], donors: &[usize], f: f64) -> Vec<f64> {
    let mut v = base.to_vec();
    for pair in donors.chunks_exact(2) {
        let (a, b) = (&population[pair[0]], &population[pair[1]]);
        for (k, vk) in v.iter_mut().enumerate() {
            *vk += f * (a[k] - b[k]);
        }
    }
    v
}

/// Builds the mutant vector for `target`.
pub fn mutate(strategy: Strategy, population: &[Vec<f64>], target: usize, best: usize, f: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let n = population.len();
    match strategy {
        Strategy::Best1Bin => {
            let d = distinct_donors(n, target, 2, rng)?;
            Ok(add_differences(&population[best], population, &d, f))
        }
        Strategy::Best3Bin => {
            let d = distinct_donors(n, target, 6, rng)?;
            Ok(add_differences(&population[best], population, &d, f))
        }
        Strategy::RandRandBin => {
            let pairs = rng.random_range(1..=3usize);
            let d = distinct_donors(n, target, 1 + 2 * pairs, rng)?;
            Ok(add_differences(&population[d[0]], population, &d[1..], f))
        }
    }
}

/// Binomial crossover; coordinate `j_rand` always comes from the mutant.
pub fn crossover_binomial(target: &[f64], mutant: &[f64], cr: f64, rng: &mut impl Rng) -> Vec<f64> {
    debug_assert_eq!(target.len(), mutant.len());
    let j_rand = rng.random_range(0..target.len());
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (&t, &m))| if j == j_rand || rng.random::<f64>() < cr { m } else { t })
        .collect()
}

/// Outcome of one run, with the best-so-far precision after every evaluation.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub best_precision: f64,
    pub trajectory: Vec<f64>,
}

pub fn de_run(config: &DEConfig, instance: &ProblemInstance, run_index: usize) -> Result<f64> {
    de_run_trace(config, instance, run_index).map(|t| t.best_precision)
}

pub fn de_run_trace(config: &DEConfig, instance: &ProblemInstance, run_index: usize) -> Result<RunTrace> {
    config.validate()?;
    if run_index >= config.runs {
        return Err(Error::InvalidConfig(format!("run index {run_index} outside [0, {})", config.runs)));
    }
    let mut rng = rng::stream_rng(&[
        config.seed,
        u64::from(instance.class_id()),
        u64::from(instance.instance_id),
        run_index as u64,
    ]);
    let bounds = instance.bounds().to_vec();
    let np = config.population_size;

    let mut trajectory = Vec::with_capacity(config.budget);
    let mut best_prec = f64::INFINITY;
    let mut record = |f: f64, traj: &mut Vec<f64>| {
        best_prec = best_prec.min(instance.precision(f));
        traj.push(best_prec);
    };

    let mut population: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let mut fitness = Vec::with_capacity(np);
    for x in &population {
        let fx = instance.evaluate(x)?;
        record(fx, &mut trajectory);
        fitness.push(fx);
    }

    let mut evals = np;
    while evals < config.budget {
        let best = argmin(&fitness);
        let mut next_pop = population.clone();
        let mut next_fit = fitness.clone();
        for target in 0..np {
            if evals >= config.budget {
                break;
            }
            let mutant = mutate(config.strategy, &population, target, best, config.f, &mut rng)?;
            let mut trial = crossover_binomial(&population[target], &mutant, config.cr, &mut rng);
            for (v, &(lo, hi)) in trial.iter_mut().zip(&bounds) {
                *v = v.clamp(lo, hi);
            }
            let ft = instance.evaluate(&trial)?;
            evals += 1;
            record(ft, &mut trajectory);
            if ft <= fitness[target] {
                next_pop[target] = trial;
                next_fit[target] = ft;
            }
        }
        population = next_pop;
        fitness = next_fit;
    }
    Ok(RunTrace {
        best_precision: best_prec,
        trajectory,
    })
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub algorithm_id: String,
    pub suite: String,
    pub class_id: u32,
    pub instance_id: u32,
    pub run_precisions: Vec<f64>,
    pub median_precision: f64,
    pub log_median_precision: f64,
}

impl PerformanceRecord {
    pub fn from_runs(algorithm_id: &str, suite: &str, class_id: u32, instance_id: u32, run_precisions: Vec<f64>) -> Self {
        let median_precision = stats::median(&run_precisions);
        PerformanceRecord {
            algorithm_id: algorithm_id.to_string(),
            suite: suite.to_string(),
            class_id,
            instance_id,
            run_precisions,
            median_precision,
            log_median_precision: log_precision(median_precision),
        }
    }
}

pub fn log_precision(precision: f64) -> f64 {
    precision.max(LOG_FLOOR).log10()
}

/// Runs every (instance, run) pair in parallel; output order follows `instances`.
pub fn collect_performance(config: &DEConfig, suite: &str, instances: &[ProblemInstance]) -> Result<Vec<PerformanceRecord>> {
    config.validate()?;
    instances
        .par_iter()
        .map(|inst| {
            let runs = (0..config.runs)
                .into_par_iter()
                .map(|r| de_run(config, inst, r))
                .collect::<Result<Vec<f64>>>()?;
            Ok(PerformanceRecord::from_runs(
                &config.algorithm_id,
                suite,
                inst.class_id(),
                inst.instance_id,
                runs,
            ))
        })
        .collect()
}
