//! Principal-component features of the decision space and of `[X | y]`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Feature, Sample};

const EXPLAINED_TARGET: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFeatures {
    pub expl_var_cov_x: f64,
    pub expl_var_cor_x: f64,
    pub expl_var_cov_init: f64,
    pub expl_var_cor_init: f64,
    pub expl_var_pc1_cov_x: f64,
    pub expl_var_pc1_cor_x: f64,
    pub expl_var_pc1_cov_init: f64,
    pub expl_var_pc1_cor_init: f64,
    /// Zero-variance columns were dropped from a correlation matrix.
    pub dropped_columns: bool,
    /// Fewer than `D + 2` rows or no variance at all.
    pub degenerate: bool,
}

impl PcaFeatures {
    pub fn features(&self) -> Vec<Feature> {
        let g = self.degenerate;
        let c = self.degenerate || self.dropped_columns;
        vec![
            Feature::new("pca.expl_var_cov_x", self.expl_var_cov_x, g),
            Feature::new("pca.expl_var_cor_x", self.expl_var_cor_x, c),
            Feature::new("pca.expl_var_cov_init", self.expl_var_cov_init, g),
            Feature::new("pca.expl_var_cor_init", self.expl_var_cor_init, c),
            Feature::new("pca.expl_var_pc1_cov_x", self.expl_var_pc1_cov_x, g),
            Feature::new("pca.expl_var_pc1_cor_x", self.expl_var_pc1_cor_x, c),
            Feature::new("pca.expl_var_pc1_cov_init", self.expl_var_pc1_cov_init, g),
            Feature::new("pca.expl_var_pc1_cor_init", self.expl_var_pc1_cor_init, c),
        ]
    }
}

/// Covariance matrix of the columns of `data` (n rows).
fn covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows() as f64;
    let means = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    centered.transpose() * &centered / (n - 1.0)
}

/// Correlation matrix over the non-constant columns; the flag reports drops.
fn correlation(cov: &DMatrix<f64>) -> (Option<DMatrix<f64>>, bool) {
    let keep: Vec<usize> = (0..cov.nrows()).filter(|&i| cov[(i, i)] > 0.0).collect();
    let dropped = keep.len() < cov.nrows();
    if keep.is_empty() {
        return (None, dropped);
    }
    let k = keep.len();
    let cor = DMatrix::from_fn(k, k, |a, b| {
        let (i, j) = (keep[a], keep[b]);
        if a == b {
            1.0
        } else {
            cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt()
        }
    });
    (Some(cor), dropped)
}

/// (fraction of components reaching 90 % variance, variance share of PC1).
fn explained(matrix: &DMatrix<f64>) -> Option<(f64, f64)> {
    let mut eig: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = eig.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut acc = 0.0;
    let mut needed = eig.len();
    for (i, v) in eig.iter().enumerate() {
        acc += v;
        if acc / total >= EXPLAINED_TARGET {
            needed = i + 1;
            break;
        }
    }
    Some((needed as f64 / eig.len() as f64, eig[0] / total))
}

pub fn feature_group_pca(sample: &Sample) -> PcaFeatures {
    let n = sample.n();
    let d = sample.dim();
    let sentinel = PcaFeatures {
        expl_var_cov_x: 1.0,
        expl_var_cor_x: 1.0,
        expl_var_cov_init: 1.0,
        expl_var_cor_init: 1.0,
        expl_var_pc1_cov_x: 1.0,
        expl_var_pc1_cor_x: 1.0,
        expl_var_pc1_cov_init: 1.0,
        expl_var_pc1_cor_init: 1.0,
        dropped_columns: false,
        degenerate: true,
    };
    if n < d + 2 {
        return sentinel;
    }
    let x = DMatrix::from_fn(n, d, |i, j| sample.row(i)[j]);
    let xy = DMatrix::from_fn(n, d + 1, |i, j| if j < d { sample.row(i)[j] } else { sample.y()[i] });
    let cov_x = covariance(&x);
    let cov_xy = covariance(&xy);
    let (cor_x, drop_x) = correlation(&cov_x);
    let (cor_xy, drop_xy) = correlation(&cov_xy);

    let (Some(a), Some(b)) = (explained(&cov_x), explained(&cov_xy)) else {
        return sentinel;
    };
    let c = cor_x.as_ref().and_then(explained).unwrap_or((1.0, 1.0));
    let e = cor_xy.as_ref().and_then(explained).unwrap_or((1.0, 1.0));
    PcaFeatures {
        expl_var_cov_x: a.0,
        expl_var_cor_x: c.0,
        expl_var_cov_init: b.0,
        expl_var_cor_init: e.0,
        expl_var_pc1_cov_x: a.1,
        expl_var_pc1_cor_x: c.1,
        expl_var_pc1_cov_init: b.1,
        expl_var_pc1_cor_init: e.1,
        dropped_columns: drop_x || drop_xy,
        degenerate: false,
    }
}
