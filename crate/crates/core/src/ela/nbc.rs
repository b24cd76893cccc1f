//! Nearest-better clustering features.

use super::{Feature, Sample};
use crate::stats::{average_ranks, euclidean, mean, pearson, sd};

#[derive(Debug, Clone, PartialEq)]
pub struct NbcFeatures {
    pub nb_dist_ratio_sd: f64,
    pub nb_dist_ratio_mean: f64,
    pub nb_cor: f64,
    pub dist_ratio_coeff_var: f64,
    pub fitness_cor: f64,
    /// All y equal (or fewer than two points).
    pub degenerate: bool,
    /// A correlation or ratio hit a zero variance.
    pub zero_variance: bool,
}

impl NbcFeatures {
    pub fn features(&self) -> Vec<Feature> {
        let f = self.degenerate;
        let v = self.degenerate || self.zero_variance;
        vec![
            Feature::new("nbc.nb_dist_ratio_sd", self.nb_dist_ratio_sd, v),
            Feature::new("nbc.nb_dist_ratio_mean", self.nb_dist_ratio_mean, f),
            Feature::new("nbc.nb_cor", self.nb_cor, v),
            Feature::new("nbc.dist_ratio_coeff_var", self.dist_ratio_coeff_var, v),
            Feature::new("nbc.fitness_cor", self.fitness_cor, v),
        ]
    }
}

/// Per-point nearest-neighbour and nearest-better distances. Points without a
/// strictly better point use their nearest-neighbour distance.
pub fn nn_and_nb_distances(sample: &Sample) -> (Vec<f64>, Vec<f64>) {
    let n = sample.n();
    let y = sample.y();
    let mut nn = vec![f64::INFINITY; n];
    let mut nb = vec![f64::INFINITY; n];
    for i in 0..n {
        let ri = sample.row(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = euclidean(ri, sample.row(j));
            if d < nn[i] {
                nn[i] = d;
            }
            if y[j] < y[i] && d < nb[i] {
                nb[i] = d;
            }
        }
        if nb[i].is_infinite() {
            nb[i] = nn[i];
        }
    }
    (nn, nb)
}

pub fn feature_group_nbc(sample: &Sample) -> NbcFeatures {
    let y = sample.y();
    let all_equal = y.iter().all(|&v| v == y[0]);
    if sample.n() < 2 || all_equal {
        return NbcFeatures {
            nb_dist_ratio_sd: 1.0,
            nb_dist_ratio_mean: 1.0,
            nb_cor: 0.0,
            dist_ratio_coeff_var: 0.0,
            fitness_cor: 0.0,
            degenerate: true,
            zero_variance: true,
        };
    }
    let (nn, nb) = nn_and_nb_distances(sample);
    let quotient: Vec<f64> = nn.iter().zip(&nb).map(|(a, b)| if *b > 0.0 { a / b } else { 1.0 }).collect();
    let ranks = average_ranks(y);

    let mut zero_variance = false;
    let mut or_sentinel = |v: Option<f64>, sentinel: f64| {
        v.unwrap_or_else(|| {
            zero_variance = true;
            sentinel
        })
    };
    let sd_nb = sd(&nb);
    let sd_ratio = or_sentinel((sd_nb > 0.0).then(|| sd(&nn) / sd_nb), 1.0);
    let mean_nb = mean(&nb);
    let mean_ratio = if mean_nb > 0.0 { mean(&nn) / mean_nb } else { 1.0 };
    let nb_cor = or_sentinel(pearson(&nn, &nb), 0.0);
    let mean_q = mean(&quotient);
    let coeff_var = or_sentinel((mean_q > 0.0).then(|| sd(&quotient) / mean_q), 0.0);
    let fitness_cor = or_sentinel(pearson(&quotient, &ranks), 0.0);
    NbcFeatures {
        nb_dist_ratio_sd: sd_ratio,
        nb_dist_ratio_mean: mean_ratio,
        nb_cor,
        dist_ratio_coeff_var: coeff_var,
        fitness_cor,
        degenerate: false,
        zero_variance,
    }
}
