//! Dispersion of the best sample points relative to the whole sample.

use super::{Feature, Sample};
use crate::stats::euclidean;

pub const DEFAULT_QUANTILES: [f64; 4] = [0.02, 0.05, 0.10, 0.25];

/// Above this many pairs the median is found by bucketing instead of
/// materialising every distance.
const MATERIALIZE_LIMIT: usize = 2_000_000;
const BUCKETS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DispQuantile {
    pub quantile: f64,
    pub ratio_mean: f64,
    pub ratio_median: f64,
    pub diff_mean: f64,
    pub diff_median: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispFeatures {
    pub per_quantile: Vec<DispQuantile>,
}

fn quantile_label(q: f64) -> String {
    format!("{:02}", (q * 100.0).round() as u32)
}

impl DispFeatures {
    pub fn features(&self) -> Vec<Feature> {
        let mut out = Vec::with_capacity(4 * self.per_quantile.len());
        for q in &self.per_quantile {
            let l = quantile_label(q.quantile);
            out.push(Feature::new(format!("disp.ratio_mean_{l}"), q.ratio_mean, q.degenerate));
            out.push(Feature::new(format!("disp.ratio_median_{l}"), q.ratio_median, q.degenerate));
            out.push(Feature::new(format!("disp.diff_mean_{l}"), q.diff_mean, q.degenerate));
            out.push(Feature::new(format!("disp.diff_median_{l}"), q.diff_median, q.degenerate));
        }
        out
    }
}

/// Mean and median of all pairwise distances among `idx`.
pub(crate) fn pairwise_mean_median(sample: &Sample, idx: &[usize]) -> (f64, f64) {
    let k = idx.len();
    let pairs = k * k.saturating_sub(1) / 2;
    if pairs == 0 {
        return (0.0, 0.0);
    }
    let each = |f: &mut dyn FnMut(f64)| {
        for a in 0..k {
            let ra = sample.row(idx[a]);
            for &b in &idx[a + 1..] {
                f(euclidean(ra, sample.row(b)));
            }
        }
    };
    if pairs <= MATERIALIZE_LIMIT {
        let mut all = Vec::with_capacity(pairs);
        each(&mut |d| all.push(d));
        let mean = all.iter().sum::<f64>() / pairs as f64;
        all.sort_unstable_by(f64::total_cmp);
        let median = if pairs % 2 == 1 {
            all[pairs / 2]
        } else {
            0.5 * (all[pairs / 2 - 1] + all[pairs / 2])
        };
        return (mean, median);
    }

    // exact median in three streaming passes
    let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    each(&mut |d| {
        sum += d;
        lo = lo.min(d);
        hi = hi.max(d);
    });
    let mean = sum / pairs as f64;
    if lo == hi {
        return (mean, lo);
    }
    let width = (hi - lo) / BUCKETS as f64;
    let bucket = |d: f64| (((d - lo) / width) as usize).min(BUCKETS - 1);
    let mut counts = vec![0usize; BUCKETS];
    each(&mut |d| counts[bucket(d)] += 1);
    let ranks = [(pairs - 1) / 2, pairs / 2];
    let mut wanted = [0usize; 2];
    let mut below = [0usize; 2];
    for (r, &rank) in ranks.iter().enumerate() {
        let mut acc = 0;
        for (b, &c) in counts.iter().enumerate() {
            if acc + c > rank {
                wanted[r] = b;
                below[r] = acc;
                break;
            }
            acc += c;
        }
    }
    let mut picked: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    each(&mut |d| {
        let b = bucket(d);
        for r in 0..2 {
            if b == wanted[r] {
                picked[r].push(d);
            }
        }
    });
    let mut order_stat = |r: usize| {
        let v = &mut picked[r];
        let pos = ranks[r] - below[r];
        *v.select_nth_unstable_by(pos, f64::total_cmp).1
    };
    let median = 0.5 * (order_stat(0) + order_stat(1));
    (mean, median)
}

/// Dispersion features for the given quantiles. The best `ceil(q·n)` points
/// (at least two) are taken in order of y, ties broken by sample index.
pub fn feature_group_disp(sample: &Sample, quantiles: &[f64]) -> DispFeatures {
    let n = sample.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sample.y()[a].total_cmp(&sample.y()[b]).then(a.cmp(&b)));
    let (mean_all, median_all) = pairwise_mean_median(sample, &order);
    let per_quantile = quantiles
        .iter()
        .map(|&q| {
            let k = ((q * n as f64).ceil() as usize).clamp(2.min(n), n);
            let (mean_q, median_q) = pairwise_mean_median(sample, &order[..k]);
            if n < 2 || mean_all <= 0.0 || median_all <= 0.0 {
                return DispQuantile {
                    quantile: q,
                    ratio_mean: 1.0,
                    ratio_median: 1.0,
                    diff_mean: 0.0,
                    diff_median: 0.0,
                    degenerate: true,
                };
            }
            DispQuantile {
                quantile: q,
                ratio_mean: mean_q / mean_all,
                ratio_median: median_q / median_all,
                diff_mean: mean_q - mean_all,
                diff_median: median_q - median_all,
                degenerate: false,
            }
        })
        .collect();
    DispFeatures { per_quantile }
}
