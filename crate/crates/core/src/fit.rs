//! Linear-parabolic model fitting.
//!
//! The model `ŷ = a·sin(x − π) + b·(x − 10)² + c` is linear in `(a, b, c)`,
//! so it is fitted by weighted linear least squares: the weighted design
//! matrix is column-equilibrated and factored with Householder QR, which
//! avoids squaring the condition number as the normal equations would.
//! The couple fitted is `(x̃, x̃²)` where `x̃` is the filtered signal.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::student_t_quantile;

/// Number of fitted coefficients (`a`, `b`, `c`).
pub const NUM_COEFFICIENTS: usize = 3;

/// Relative pivot size below which the design is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {NUM_COEFFICIENTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("x has {x} values, y {y}, weights {weights}")]
    LengthMismatch { x: usize, y: usize, weights: usize },
    #[error("weight {index} is {value}; weights must be positive and finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("non-finite data at index {0}")]
    NonFinite(usize),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("{n} points leave no residual degrees of freedom for {NUM_COEFFICIENTS} coefficients")]
    DegenerateDof { n: usize },
    #[error("response has zero variance; cannot derive variance weights")]
    ZeroVariance,
}

/// Points `(x_i, y_i = x_i²)` with per-point weights `w_i = 1/σ_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPairs {
    x: Vec<f64>,
    y: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadraticPairs {
    /// General constructor; `y` need not be `x²` (useful for tests and for
    /// fitting arbitrary responses with the same basis).
    pub fn new(x: Vec<f64>, y: Vec<f64>, weights: Vec<f64>) -> Result<Self, FitError> {
        if x.len() != y.len() || x.len() != weights.len() {
            return Err(FitError::LengthMismatch {
                x: x.len(),
                y: y.len(),
                weights: weights.len(),
            });
        }
        if x.len() < NUM_COEFFICIENTS {
            return Err(FitError::TooFewPoints(x.len()));
        }
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(FitError::NonFinite(i));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(FitError::InvalidWeight {
                index: i,
                value: weights[i],
            });
        }
        Ok(Self { x, y, weights })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Replace every weight by `w`.
    pub fn with_uniform_weight(mut self, w: f64) -> Result<Self, FitError> {
        if !(w.is_finite() && w > 0.0) {
            return Err(FitError::InvalidWeight { index: 0, value: w });
        }
        self.weights.iter_mut().for_each(|v| *v = w);
        Ok(self)
    }
}

/// `x = filtered`, `y = filtered²`, unit weights.
pub fn quadratic_pairs(filtered: &[f64]) -> Result<QuadraticPairs, FitError> {
    let x = filtered.to_vec();
    let y = x.iter().map(|v| v * v).collect();
    let weights = vec![1.0; x.len()];
    QuadraticPairs::new(x, y, weights)
}

/// How the per-point weights `w_i = 1/σ_i²` are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `w_i = 1`, so `ζ` is the plain sum of squared residuals.
    #[default]
    Uniform,
    /// One weight per fitted block: the reciprocal of the sample variance of
    /// the response `y = x̃²` over that block.
    BlockVariance,
}

impl Weighting {
    pub fn apply(self, pairs: QuadraticPairs) -> Result<QuadraticPairs, FitError> {
        match self {
            Weighting::Uniform => Ok(pairs),
            Weighting::BlockVariance => {
                let var = sample_variance(pairs.y());
                if !(var.is_finite() && var > 0.0) {
                    return Err(FitError::ZeroVariance);
                }
                pairs.with_uniform_weight(1.0 / var)
            }
        }
    }
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Basis functions at `x`: `(sin(x − π), (x − 10)², 1)`.
pub fn design_row(x: f64) -> [f64; NUM_COEFFICIENTS] {
    [(x - PI).sin(), (x - 10.0).powi(2), 1.0]
}

/// Lower and upper confidence bound for one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `s²·(AᵀWA)⁻¹` with `s² = ζ / dof`.
    pub covariance: [[f64; NUM_COEFFICIENTS]; NUM_COEFFICIENTS],
    /// Residual degrees of freedom `n − 3`.
    pub dof: usize,
    /// 95% two-sided t-bounds for `a`, `b`, `c`.
    pub cb95: [Bounds; NUM_COEFFICIENTS],
    /// Weighted sum of squared residuals.
    pub sse: f64,
    pub n: usize,
}

impl FitResult {
    pub fn coefficients(&self) -> [f64; NUM_COEFFICIENTS] {
        [self.a, self.b, self.c]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [s, q, one] = design_row(x);
        self.a * s + self.b * q + self.c * one
    }
}

/// Weighted least-squares fit of the linear-parabolic model.
pub fn fit_model(pairs: &QuadraticPairs) -> Result<FitResult, FitError> {
    let n = pairs.len();
    if n <= NUM_COEFFICIENTS {
        return Err(FitError::DegenerateDof { n });
    }
    let sqrt_w: Vec<f64> = pairs.weights.iter().map(|w| w.sqrt()).collect();
    let mut design = DMatrix::<f64>::zeros(n, NUM_COEFFICIENTS);
    for (i, (&x, &sw)) in pairs.x.iter().zip(&sqrt_w).enumerate() {
        for (j, v) in design_row(x).into_iter().enumerate() {
            design[(i, j)] = sw * v;
        }
    }
    let mut scale = [0.0; NUM_COEFFICIENTS];
    for (j, s) in scale.iter_mut().enumerate() {
        *s = design.column(j).norm();
        if !(s.is_finite() && *s > 0.0) {
            return Err(FitError::RankDeficient);
        }
        design.column_mut(j).unscale_mut(*s);
    }
    let mut rhs = DVector::from_iterator(n, pairs.y.iter().zip(&sqrt_w).map(|(y, sw)| y * sw));

    let qr = design.qr();
    let r: Matrix3<f64> = qr.r().fixed_view::<3, 3>(0, 0).into_owned();
    let pivot_max = (0..NUM_COEFFICIENTS).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..NUM_COEFFICIENTS).any(|j| r[(j, j)].abs() <= RANK_TOLERANCE * pivot_max) {
        return Err(FitError::RankDeficient);
    }
    qr.q_tr_mul(&mut rhs);
    let qtb = Vector3::new(rhs[0], rhs[1], rhs[2]);
    let z = r
        .solve_upper_triangular(&qtb)
        .ok_or(FitError::RankDeficient)?;
    let coef = [z[0] / scale[0], z[1] / scale[1], z[2] / scale[2]];

    let sse: f64 = pairs
        .x
        .iter()
        .zip(&pairs.y)
        .zip(&pairs.weights)
        .map(|((&x, &y), &w)| {
            let row = design_row(x);
            let yhat = coef[0] * row[0] + coef[1] * row[1] + coef[2] * row[2];
            w * (y - yhat).powi(2)
        })
        .sum();
    let dof = n - NUM_COEFFICIENTS;
    let s2 = sse / dof as f64;

    let r_inv = r.try_inverse().ok_or(FitError::RankDeficient)?;
    let unscaled = r_inv * r_inv.transpose();
    let mut covariance = [[0.0; NUM_COEFFICIENTS]; NUM_COEFFICIENTS];
    for i in 0..NUM_COEFFICIENTS {
        for j in 0..NUM_COEFFICIENTS {
            covariance[i][j] = s2 * unscaled[(i, j)] / (scale[i] * scale[j]);
        }
    }
    let t = student_t_quantile(0.975, dof as f64);
    let cb95 = std::array::from_fn(|j| {
        let half = t * covariance[j][j].max(0.0).sqrt();
        Bounds {
            lo: coef[j] - half,
            hi: coef[j] + half,
        }
    });

    Ok(FitResult {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        covariance,
        dof,
        cb95,
        sse,
        n,
    })
}

/// `ŷ_i = a·sin(x_i − π) + b·(x_i − 10)² + c`.
pub fn predict(fit: &FitResult, x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| fit.eval(v)).collect()
}
