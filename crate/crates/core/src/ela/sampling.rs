use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stats::euclidean;

/// Candidate designs drawn by the maximin sampler.
pub const IMPROVED_LHS_CANDIDATES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Lhs,
    ImprovedLhs,
}

/// Latin hypercube sample of `n` points inside `bounds`, one row per point.
///
/// `ImprovedLhs` draws [`IMPROVED_LHS_CANDIDATES`] designs from the same
/// stream and keeps the one with the largest minimum pairwise distance; its
/// first candidate is exactly the plain `Lhs` design for the same rng state.
pub fn lhs_sample(n: usize, bounds: &[(f64, f64)], sampler: Sampler, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    match sampler {
        Sampler::Lhs => latin_hypercube(n, bounds, rng),
        Sampler::ImprovedLhs => {
            let mut best = latin_hypercube(n, bounds, rng);
            let mut best_score = min_pairwise_distance(&best);
            for _ in 1..IMPROVED_LHS_CANDIDATES {
                let cand = latin_hypercube(n, bounds, rng);
                let score = min_pairwise_distance(&cand);
                if score > best_score {
                    best = cand;
                    best_score = score;
                }
            }
            best
        }
    }
}

fn latin_hypercube(n: usize, bounds: &[(f64, f64)], rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; bounds.len()]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        strata.shuffle(rng);
        for (point, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            point[j] = (lo + (s as f64 + u) / n as f64 * (hi - lo)).min(hi);
        }
    }
    points
}

/// Smallest distance between two distinct rows; infinite for fewer than two.
pub fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(euclidean(&points[i], &points[j]));
        }
    }
    best
}
