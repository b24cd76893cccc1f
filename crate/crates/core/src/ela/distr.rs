//! y-distribution features.

use super::Feature;
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, PartialEq)]
pub struct DistrFeatures {
    pub skewness: f64,
    pub kurtosis: f64,
    pub number_of_peaks: f64,
    /// Set when y has zero variance or fewer than four values.
    pub degenerate: bool,
}

impl DistrFeatures {
    pub fn features(&self) -> Vec<Feature> {
        let f = self.degenerate;
        vec![
            Feature::new("distr.skewness", self.skewness, f),
            Feature::new("distr.kurtosis", self.kurtosis, f),
            Feature::new("distr.number_of_peaks", self.number_of_peaks, f),
        ]
    }
}

/// Bias-corrected skewness and excess kurtosis, and the number of modes of
/// a smoothed histogram.
pub fn feature_group_distr(y: &[f64]) -> DistrFeatures {
    let n = y.len();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if n < 4 || lo == hi {
        return DistrFeatures {
            skewness: 0.0,
            kurtosis: 0.0,
            number_of_peaks: 1.0,
            degenerate: true,
        };
    }
    let nf = n as f64;
    let mean = y.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in y {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let g1 = m3 / m2.powf(1.5);
    let g2 = m4 / (m2 * m2) - 3.0;
    let skewness = g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0);
    let kurtosis = ((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0));
    DistrFeatures {
        skewness,
        kurtosis,
        number_of_peaks: number_of_peaks(y, lo, hi) as f64,
        degenerate: false,
    }
}

/// Freedman–Diaconis histogram, 3-bin moving average, count of local maxima.
/// Plateaus count once; Sturges' rule is used when the IQR is zero.
fn number_of_peaks(y: &[f64], lo: f64, hi: f64) -> usize {
    let n = y.len();
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let range = hi - lo;
    let bins = if iqr > 0.0 {
        let width = 2.0 * iqr / (n as f64).cbrt();
        ((range / width).ceil() as usize).clamp(1, n)
    } else {
        (n as f64).log2().ceil() as usize + 1
    };
    let mut counts = vec![0.0f64; bins];
    for &v in y {
        let b = (((v - lo) / range) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1.0;
    }
    let smooth: Vec<f64> = (0..bins)
        .map(|i| {
            let a = i.saturating_sub(1);
            let b = (i + 1).min(bins - 1);
            counts[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
        })
        .collect();
    count_modes(&smooth)
}

fn count_modes(values: &[f64]) -> usize {
    let mut runs: Vec<f64> = Vec::new();
    for &v in values {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    if runs.len() <= 1 {
        return 1;
    }
    (0..runs.len())
        .filter(|&i| {
            let left = i == 0 || runs[i] > runs[i - 1];
            let right = i + 1 == runs.len() || runs[i] > runs[i + 1];
            left && right
        })
        .count()
}
