//! Goodness-of-fit features and their min-max scaling.
//!
//! For observed `y`, predictions `ŷ`, weights `w` and `m` fitted coefficients:
//!
//! * `ζ = Σ w_i (y_i − ŷ_i)²`
//! * `φ = 1 − Σ w_i (y_i − ŷ_i)² / Σ w_i (y_i − ȳ)²` with `ȳ` the weighted mean
//! * `σ_adj = 1 − (1 − φ)(n − 1)/(n − m − 1)`
//! * `ψ = √(ζ / (n − m))`

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Class;

pub const NUM_FEATURES: usize = 4;
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = ["zeta", "phi", "sigma_adj", "psi"];

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("response has zero total variation; R-square is undefined")]
    ZeroTotalVariation,
    #[error("y has {y} values, yhat {yhat}, weights {weights}")]
    LengthMismatch { y: usize, yhat: usize, weights: usize },
    #[error("{n} points are too few for {m} coefficients (need n > m + 1)")]
    TooFewPoints { n: usize, m: usize },
    #[error("weights must be positive and finite")]
    InvalidWeight,
    #[error("cannot fit a scaler on an empty training set")]
    EmptyTrainingSet,
}

/// Which R-square formula to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RSquare {
    /// `1 − SSR/SST` with weighted sums.
    #[default]
    RatioOfSums,
    /// `1 − Σ_i (y_i − ŷ_i)² / (y_i − ȳ)²`, the per-point ratio. Diverges
    /// whenever some `y_i` equals the mean; kept for comparison only.
    PerPointRatio,
}

/// The four statistics of one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub zeta: f64,
    pub phi: f64,
    pub sigma_adj: f64,
    pub psi: f64,
}

impl GoodnessOfFit {
    pub fn to_array(self) -> [f64; NUM_FEATURES] {
        [self.zeta, self.phi, self.sigma_adj, self.psi]
    }

    pub fn from_array(v: [f64; NUM_FEATURES]) -> Self {
        Self {
            zeta: v[0],
            phi: v[1],
            sigma_adj: v[2],
            psi: v[3],
        }
    }
}

/// Goodness-of-fit statistics with the default (ratio-of-sums) R-square.
pub fn gof(y: &[f64], yhat: &[f64], weights: &[f64], m: usize) -> Result<GoodnessOfFit, FeatureError> {
    gof_with(y, yhat, weights, m, RSquare::RatioOfSums)
}

pub fn gof_with(
    y: &[f64],
    yhat: &[f64],
    weights: &[f64],
    m: usize,
    r_square: RSquare,
) -> Result<GoodnessOfFit, FeatureError> {
    let n = y.len();
    if yhat.len() != n || weights.len() != n {
        return Err(FeatureError::LengthMismatch {
            y: n,
            yhat: yhat.len(),
            weights: weights.len(),
        });
    }
    if n <= m + 1 {
        return Err(FeatureError::TooFewPoints { n, m });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(FeatureError::InvalidWeight);
    }
    let wsum: f64 = weights.iter().sum();
    let ybar = y.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let zeta: f64 = y
        .iter()
        .zip(yhat)
        .zip(weights)
        .map(|((v, p), w)| w * (v - p).powi(2))
        .sum();
    let phi = match r_square {
        RSquare::RatioOfSums => {
            let sst: f64 = y
                .iter()
                .zip(weights)
                .map(|(v, w)| w * (v - ybar).powi(2))
                .sum();
            if sst == 0.0 {
                return Err(FeatureError::ZeroTotalVariation);
            }
            1.0 - zeta / sst
        }
        RSquare::PerPointRatio => {
            if y.iter().all(|v| *v == y[0]) {
                return Err(FeatureError::ZeroTotalVariation);
            }
            1.0 - y
                .iter()
                .zip(yhat)
                .map(|(v, p)| (v - p).powi(2) / (v - ybar).powi(2))
                .sum::<f64>()
        }
    };
    Ok(GoodnessOfFit {
        zeta,
        phi,
        sigma_adj: adjusted_r_square(phi, n, m),
        psi: (zeta / (n - m) as f64).sqrt(),
    })
}

pub fn adjusted_r_square(phi: f64, n: usize, m: usize) -> f64 {
    1.0 - (1.0 - phi) * (n - 1) as f64 / (n - m - 1) as f64
}

/// Where a feature vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub epoch: usize,
    pub channel: usize,
    pub segment: usize,
}

/// The predictor `[ζ, φ, σ_adj, ψ]` of one fit, with provenance and label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub provenance: Provenance,
    pub label: Option<Class>,
    pub stats: GoodnessOfFit,
}

impl FeatureVector {
    pub fn new(stats: GoodnessOfFit, provenance: Provenance, label: Option<Class>) -> Self {
        Self {
            provenance,
            label,
            stats,
        }
    }

    pub fn values(&self) -> [f64; NUM_FEATURES] {
        self.stats.to_array()
    }
}

/// Per-feature `(min, max)` learned from training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: [f64; NUM_FEATURES],
    pub max: [f64; NUM_FEATURES],
}

impl FeatureScaler {
    pub fn scale_values(&self, v: [f64; NUM_FEATURES]) -> [f64; NUM_FEATURES] {
        std::array::from_fn(|j| {
            let span = self.max[j] - self.min[j];
            if span > 0.0 {
                ((v[j] - self.min[j]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
    }

    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector {
            stats: GoodnessOfFit::from_array(self.scale_values(v.values())),
            ..*v
        }
    }
}

pub fn fit_scaler<'a, I>(train: I) -> Result<FeatureScaler, FeatureError>
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    let mut min = [f64::INFINITY; NUM_FEATURES];
    let mut max = [f64::NEG_INFINITY; NUM_FEATURES];
    let mut any = false;
    for v in train {
        any = true;
        for (j, x) in v.values().into_iter().enumerate() {
            min[j] = min[j].min(x);
            max[j] = max[j].max(x);
        }
    }
    if !any {
        return Err(FeatureError::EmptyTrainingSet);
    }
    Ok(FeatureScaler { min, max })
}

pub fn apply_scaler(scaler: &FeatureScaler, v: &FeatureVector) -> FeatureVector {
    scaler.apply(v)
}
