//! Information-content features along a nearest-neighbour tour.

use super::{Feature, Sample};
use crate::stats::euclidean;

/// Entropy below this value counts as settled.
const SETTLING_THRESHOLD: f64 = 0.05;
/// Partial-information fraction used for `eps_ratio`.
const PARTIAL_INFO_RATIO: f64 = 0.5;
const GRID_STEPS: usize = 1000;
const GRID_LOG10_MIN: f64 = -5.0;
const GRID_LOG10_MAX: f64 = 15.0;
/// Reported in place of log10(0) when the zero threshold is selected.
pub const EPS_ZERO_LOG10: f64 = GRID_LOG10_MIN - 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IcFeatures {
    pub h_max: f64,
    pub eps_s: f64,
    pub eps_max: f64,
    pub m0: f64,
    pub eps_ratio: f64,
    pub degenerate: bool,
}

impl IcFeatures {
    pub fn features(&self) -> Vec<Feature> {
        let f = self.degenerate;
        vec![
            Feature::new("ic.h_max", self.h_max, f),
            Feature::new("ic.eps_s", self.eps_s, f),
            Feature::new("ic.eps_max", self.eps_max, f),
            Feature::new("ic.m0", self.m0, f),
            Feature::new("ic.eps_ratio", self.eps_ratio, f),
        ]
    }

    fn sentinel() -> Self {
        IcFeatures {
            h_max: 0.0,
            eps_s: 0.0,
            eps_max: 0.0,
            m0: 0.0,
            eps_ratio: 0.0,
            degenerate: true,
        }
    }
}

/// Greedy nearest-neighbour ordering starting at the best point; ties go to
/// the lower index.
pub fn nearest_neighbor_tour(sample: &Sample) -> Vec<usize> {
    let n = sample.n();
    if n == 0 {
        return Vec::new();
    }
    let y = sample.y();
    let start = (0..n).min_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b))).unwrap();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let here = sample.row(cur);
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, seen) in visited.iter().enumerate() {
            if *seen {
                continue;
            }
            let d = euclidean(here, sample.row(j));
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

/// Relative thresholds: `0` followed by 1000 log-spaced values in `[1e-5, 1e15]`.
pub fn epsilon_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..GRID_STEPS).map(|i| {
            let t = i as f64 / (GRID_STEPS - 1) as f64;
            10f64.powf(GRID_LOG10_MIN + t * (GRID_LOG10_MAX - GRID_LOG10_MIN))
        }))
        .collect()
}

fn log10_eps(eps: f64) -> f64 {
    if eps == 0.0 {
        EPS_ZERO_LOG10
    } else {
        eps.log10()
    }
}

fn symbols(diffs: &[f64], threshold: f64) -> Vec<i8> {
    diffs
        .iter()
        .map(|&d| {
            if d > threshold {
                1
            } else if d < -threshold {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Base-2 entropy of consecutive unequal symbol pairs.
pub fn information_content(psi: &[i8]) -> f64 {
    if psi.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in psi.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let total = (psi.len() - 1) as f64;
    let mut h = 0.0;
    for (p, row) in counts.iter().enumerate() {
        for (q, &c) in row.iter().enumerate() {
            if p != q && c > 0 {
                let pr = c as f64 / total;
                h -= pr * pr.log2();
            }
        }
    }
    h
}

/// Length of the sequence left after dropping zeros and repeated symbols,
/// relative to the number of symbols.
pub fn partial_information(psi: &[i8]) -> f64 {
    if psi.is_empty() {
        return 0.0;
    }
    let mut mu = 0usize;
    let mut last = 0i8;
    for &s in psi {
        if s != 0 && s != last {
            mu += 1;
            last = s;
        }
    }
    mu as f64 / psi.len() as f64
}

pub fn feature_group_ic(sample: &Sample) -> IcFeatures {
    if sample.n() < 3 {
        return IcFeatures::sentinel();
    }
    let tour = nearest_neighbor_tour(sample);
    let y = sample.y();
    let diffs: Vec<f64> = tour.windows(2).map(|w| y[w[1]] - y[w[0]]).collect();
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if scale == 0.0 {
        return IcFeatures::sentinel();
    }
    let grid = epsilon_grid();
    let mut h = Vec::with_capacity(grid.len());
    let mut m = Vec::with_capacity(grid.len());
    for &eps in &grid {
        let psi = symbols(&diffs, eps * scale);
        h.push(information_content(&psi));
        m.push(partial_information(&psi));
    }
    let (imax, h_max) = h
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bh), (i, v)| if v > bh { (i, v) } else { (bi, bh) });
    let settled = h.iter().position(|&v| v < SETTLING_THRESHOLD).unwrap_or(grid.len() - 1);
    let m0 = m[0];
    let ratio_idx = m.iter().rposition(|&v| v > PARTIAL_INFO_RATIO * m0);
    IcFeatures {
        h_max,
        eps_s: log10_eps(grid[settled]),
        eps_max: log10_eps(grid[imax]),
        m0,
        eps_ratio: ratio_idx.map_or(EPS_ZERO_LOG10, |i| log10_eps(grid[i])),
        degenerate: false,
    }
}
