//! Linear and diagonal-quadratic meta-model features.

use nalgebra::{DMatrix, DVector};

use super::{Feature, Sample};

const RIDGE_PENALTY: f64 = 1e-10;
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatures {
    pub lin_r2: f64,
    pub lin_intercept: f64,
    pub lin_coef_min: f64,
    pub lin_coef_max: f64,
    pub lin_coef_max_by_min: f64,
    pub quad_r2: f64,
    pub quad_cond: f64,
    /// A design was rank deficient and the ridge fallback was used.
    pub ridge_fallback: bool,
    /// Constant y or too few rows: r² values are sentinels.
    pub degenerate: bool,
    /// Zero denominator in a coefficient ratio.
    pub ratio_sentinel: bool,
}

impl MetaFeatures {
    pub fn features(&self) -> Vec<Feature> {
        let fit = self.degenerate || self.ridge_fallback;
        vec![
            Feature::new("meta.lin_r2", self.lin_r2, fit),
            Feature::new("meta.lin_intercept", self.lin_intercept, fit),
            Feature::new("meta.lin_coef_min", self.lin_coef_min, fit),
            Feature::new("meta.lin_coef_max", self.lin_coef_max, fit),
            Feature::new("meta.lin_coef_max_by_min", self.lin_coef_max_by_min, fit || self.ratio_sentinel),
            Feature::new("meta.quad_r2", self.quad_r2, fit),
            Feature::new("meta.quad_cond", self.quad_cond, fit || self.ratio_sentinel),
        ]
    }
}

struct Fit {
    coef: DVector<f64>,
    adj_r2: f64,
    ridge: bool,
    constant_y: bool,
}

fn least_squares(a: DMatrix<f64>, y: &DVector<f64>) -> Fit {
    let (n, p) = a.shape();
    let qr = a.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..p).map(|i| r[(i, i)].abs()).collect();
    let max_d = diag.iter().cloned().fold(0.0, f64::max);
    let full_rank = max_d > 0.0 && diag.iter().all(|&d| d > RANK_TOLERANCE * max_d);
    let solved = if full_rank {
        let qty = qr.q().transpose() * y;
        r.solve_upper_triangular(&qty)
    } else {
        None
    };
    let (coef, ridge) = match solved {
        Some(c) => (c, false),
        None => {
            let ata = a.transpose() * &a + DMatrix::identity(p, p) * RIDGE_PENALTY;
            let aty = a.transpose() * y;
            let c = ata.cholesky().map(|ch| ch.solve(&aty)).unwrap_or_else(|| DVector::zeros(p));
            (c, true)
        }
    };
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let resid = y - &a * &coef;
    let ssr: f64 = resid.iter().map(|v| v * v).sum();
    let constant_y = y.iter().all(|&v| v == y[0]);
    let adj_r2 = if constant_y {
        0.0
    } else {
        let r2 = 1.0 - ssr / sst;
        1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64)
    };
    Fit {
        coef,
        adj_r2,
        ridge,
        constant_y,
    }
}

/// `max / min`, or `(1, true)` when the ratio is undefined.
fn abs_ratio(values: &[f64]) -> (f64, bool) {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min > 0.0 && min.is_finite() {
        (max / min, false)
    } else {
        (1.0, true)
    }
}

/// Fits `y ~ 1 + x` and `y ~ 1 + x + x²`; r² values are adjusted.
pub fn feature_group_meta(sample: &Sample) -> MetaFeatures {
    let n = sample.n();
    let d = sample.dim();
    if n <= 2 * d + 1 {
        return MetaFeatures {
            lin_r2: 0.0,
            lin_intercept: 0.0,
            lin_coef_min: 0.0,
            lin_coef_max: 0.0,
            lin_coef_max_by_min: 1.0,
            quad_r2: 0.0,
            quad_cond: 1.0,
            ridge_fallback: false,
            degenerate: true,
            ratio_sentinel: true,
        };
    }
    let y = DVector::from_column_slice(sample.y());
    let lin = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { sample.row(i)[j - 1] });
    let quad = DMatrix::from_fn(n, 2 * d + 1, |i, j| match j {
        0 => 1.0,
        j if j <= d => sample.row(i)[j - 1],
        j => sample.row(i)[j - d - 1].powi(2),
    });
    let lin_fit = least_squares(lin, &y);
    let quad_fit = least_squares(quad, &y);

    let slopes: Vec<f64> = lin_fit.coef.iter().skip(1).copied().collect();
    let (lin_ratio, lin_bad) = abs_ratio(&slopes);
    let quad_terms: Vec<f64> = quad_fit.coef.iter().skip(d + 1).copied().collect();
    let (quad_cond, quad_bad) = abs_ratio(&quad_terms);
    MetaFeatures {
        lin_r2: lin_fit.adj_r2,
        lin_intercept: lin_fit.coef[0],
        lin_coef_min: slopes.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
        lin_coef_max: slopes.iter().fold(0.0, |m, v| m.max(v.abs())),
        lin_coef_max_by_min: lin_ratio,
        quad_r2: quad_fit.adj_r2,
        quad_cond,
        ridge_fallback: lin_fit.ridge || quad_fit.ridge,
        degenerate: lin_fit.constant_y,
        ratio_sentinel: lin_bad || quad_bad,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_sample(n: usize, d: usize, f: impl Fn(&[f64]) -> f64) -> Sample {
        let mut rng = crate::rng::stream_rng(&[21, d as u64]);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let y = rows.iter().map(|r| f(r)).collect();
        Sample::new(&rows, y)
    }

    #[test]
    fn exact_linear_fit() {
        let s = random_sample(100, 3, |x| 2.0 + x[0] - 3.0 * x[1] + 0.5 * x[2]);
        let m = feature_group_meta(&s);
        assert!((m.lin_r2 - 1.0).abs() < 1e-9);
        assert!((m.lin_intercept - 2.0).abs() < 1e-9);
        assert!((m.lin_coef_min - 0.5).abs() < 1e-9);
        assert!((m.lin_coef_max - 3.0).abs() < 1e-9);
        assert!((m.lin_coef_max_by_min - 6.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_has_unit_condition() {
        let s = random_sample(200, 4, |x| x.iter().map(|v| v * v).sum());
        let m = feature_group_meta(&s);
        assert!((m.quad_r2 - 1.0).abs() < 1e-6);
        assert!((m.quad_cond - 1.0).abs() < 1e-6);
    }

    #[test]
    fn anisotropic_quadratic() {
        let s = random_sample(200, 2, |x| 10.0 * x[0] * x[0] + x[1] * x[1]);
        assert!((feature_group_meta(&s).quad_cond - 10.0).abs() < 1e-6);
    }

    #[test]
    fn duplicated_column_uses_ridge() {
        let mut rng = crate::rng::stream_rng(&[22]);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let v = rng.random_range(-1.0..1.0);
                vec![v, v]
            })
            .collect();
        let y = rows.iter().map(|r| r[0]).collect();
        let m = feature_group_meta(&Sample::new(&rows, y));
        assert!(m.ridge_fallback);
        assert!(m.lin_r2.is_finite() && m.quad_cond.is_finite());
    }

    #[test]
    fn too_few_rows_is_sentinel() {
        let s = random_sample(5, 2, |x| x[0]);
        assert!(feature_group_meta(&s).degenerate);
    }
}
