//! Base test functions. Every function attains its global minimum value 0
//! at the origin, so instance transforms only need to track shifts.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFunction {
    Sphere,
    Ellipsoid,
    Rosenbrock,
    Rastrigin,
    Ackley,
    Griewank,
    /// Schwefel 2.21, the max-abs function.
    SchwefelMax,
    DifferentPowers,
    LinearSlope,
    SchafferF7,
    Weierstrass,
    BentCigar,
}

const WEIERSTRASS_A: f64 = 0.5;
const WEIERSTRASS_B: f64 = 3.0;
const WEIERSTRASS_KMAX: i32 = 20;

impl BaseFunction {
    pub const ALL: [BaseFunction; 12] = [
        BaseFunction::Sphere,
        BaseFunction::Ellipsoid,
        BaseFunction::Rosenbrock,
        BaseFunction::Rastrigin,
        BaseFunction::Ackley,
        BaseFunction::Griewank,
        BaseFunction::SchwefelMax,
        BaseFunction::DifferentPowers,
        BaseFunction::LinearSlope,
        BaseFunction::SchafferF7,
        BaseFunction::Weierstrass,
        BaseFunction::BentCigar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseFunction::Sphere => "sphere",
            BaseFunction::Ellipsoid => "ellipsoid",
            BaseFunction::Rosenbrock => "rosenbrock",
            BaseFunction::Rastrigin => "rastrigin",
            BaseFunction::Ackley => "ackley",
            BaseFunction::Griewank => "griewank",
            BaseFunction::SchwefelMax => "schwefel_2_21",
            BaseFunction::DifferentPowers => "different_powers",
            BaseFunction::LinearSlope => "linear_slope",
            BaseFunction::SchafferF7 => "schaffer_f7",
            BaseFunction::Weierstrass => "weierstrass",
            BaseFunction::BentCigar => "bent_cigar",
        }
    }

    pub fn eval(self, z: &[f64]) -> f64 {
        let d = z.len();
        // exponent ramp (i / (d - 1)) used by the ill-conditioned functions
        let ramp = |i: usize| if d > 1 { i as f64 / (d - 1) as f64 } else { 0.0 };
        match self {
            BaseFunction::Sphere => z.iter().map(|v| v * v).sum(),
            BaseFunction::Ellipsoid => z.iter().enumerate().map(|(i, v)| 10f64.powf(6.0 * ramp(i)) * v * v).sum(),
            BaseFunction::Rosenbrock => {
                // shifted by one so the optimum sits at the origin
                let mut s = 0.0;
                for i in 0..d.saturating_sub(1) {
                    let (a, b) = (z[i] + 1.0, z[i + 1] + 1.0);
                    s += 100.0 * (b - a * a).powi(2) + (a - 1.0).powi(2);
                }
                s
            }
            BaseFunction::Rastrigin => 10.0 * d as f64 + z.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>(),
            BaseFunction::Ackley => {
                let n = d as f64;
                let sq = z.iter().map(|v| v * v).sum::<f64>() / n;
                let cs = z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                let v = -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E;
                v.max(0.0)
            }
            BaseFunction::Griewank => {
                let s: f64 = z.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = z.iter().enumerate().map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos()).product();
                1.0 + s - p
            }
            BaseFunction::SchwefelMax => z.iter().fold(0.0, |m, v| m.max(v.abs())),
            BaseFunction::DifferentPowers => z.iter().enumerate().map(|(i, v)| v.abs().powf(2.0 + 4.0 * ramp(i))).sum(),
            BaseFunction::LinearSlope => {
                // slope on the positive half-axis, plateau of optima for z_i <= 0
                z.iter().enumerate().map(|(i, v)| 10f64.powf(ramp(i)) * v.max(0.0)).sum()
            }
            BaseFunction::SchafferF7 => {
                let pairs: Vec<f64> = if d == 1 {
                    vec![z[0].abs()]
                } else {
                    z.windows(2).map(|w| (w[0] * w[0] + w[1] * w[1]).sqrt()).collect()
                };
                let m = pairs.len() as f64;
                let s: f64 = pairs
                    .iter()
                    .map(|&s| s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2))
                    .sum();
                (s / m).powi(2)
            }
            BaseFunction::Weierstrass => {
                let terms = |v: f64| -> f64 {
                    (0..=WEIERSTRASS_KMAX)
                        .map(|k| WEIERSTRASS_A.powi(k) * (2.0 * PI * WEIERSTRASS_B.powi(k) * (v + 0.5)).cos())
                        .sum()
                };
                let offset = terms(0.0);
                z.iter().map(|&v| terms(v) - offset).sum::<f64>().abs()
            }
            BaseFunction::BentCigar => z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>(),
        }
    }
}
