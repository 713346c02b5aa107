//! Two-point central difference FIR filter.
//!
//! The kernel has exactly two nonzero taps, `b[−L] = 1/(2·L·Ts)` and
//! `b[+L] = −1/(2·L·Ts)`, so convolution reduces to
//! `x̃[n] = (x[n+L] − x[n−L]) / (2·L·Ts)` and its frequency response is
//! `j·sin(L·Ω) / (L·Ts)` with `Ω = 2πf/Fs`.
//!
//! With `L = round(Fs/5) = 51` at 256 Hz the response has its first null at
//! `Fs/(2L) ≈ 2.51 Hz` and repeats every `Fs/L ≈ 5.02 Hz` above that; it is
//! not a 50 Hz low-pass on its own. The code follows the transfer function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("skip factor must be at least 1, got {0}")]
    InvalidSkip(usize),
    #[error("sample interval must be positive and finite, got {0}")]
    InvalidInterval(f64),
    #[error("frequency {freq_hz} Hz outside [0, {nyquist_hz}] Hz")]
    FrequencyOutOfRange { freq_hz: f64, nyquist_hz: f64 },
}

/// Skip factor `L = round(Fs / 5)`, at least 1. Rounds half away from zero.
///
/// # Panics
///
/// If `sampling_rate_hz` is not positive and finite.
pub fn skip_factor(sampling_rate_hz: f64) -> usize {
    assert!(
        sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0,
        "sampling rate must be positive, got {sampling_rate_hz}"
    );
    ((sampling_rate_hz / 5.0).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirKernel {
    skip: usize,
    sample_interval_s: f64,
    /// Taps for `k = −L..=L`; index `k + L`.
    coefficients: Vec<f64>,
}

impl FirKernel {
    pub fn new(skip: usize, sample_interval_s: f64) -> Result<Self, FilterError> {
        if skip < 1 {
            return Err(FilterError::InvalidSkip(skip));
        }
        if !(sample_interval_s.is_finite() && sample_interval_s > 0.0) {
            return Err(FilterError::InvalidInterval(sample_interval_s));
        }
        let gain = 1.0 / (2.0 * skip as f64 * sample_interval_s);
        let mut coefficients = vec![0.0; 2 * skip + 1];
        coefficients[0] = gain;
        coefficients[2 * skip] = -gain;
        Ok(Self {
            skip,
            sample_interval_s,
            coefficients,
        })
    }

    /// Kernel for a sampling rate, with `L` from [`skip_factor`] unless
    /// overridden.
    pub fn for_sampling_rate(sampling_rate_hz: f64, skip: Option<usize>) -> Result<Self, FilterError> {
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(FilterError::InvalidInterval(1.0 / sampling_rate_hz));
        }
        let skip = skip.unwrap_or_else(|| skip_factor(sampling_rate_hz));
        Self::new(skip, 1.0 / sampling_rate_hz)
    }

    pub fn skip(&self) -> usize {
        self.skip
    }

    pub fn sample_interval_s(&self) -> f64 {
        self.sample_interval_s
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Tap `b[k]` for `k ∈ [−L, L]`; zero outside.
    pub fn coefficient(&self, k: isize) -> f64 {
        let l = self.skip as isize;
        if k < -l || k > l {
            0.0
        } else {
            self.coefficients[(k + l) as usize]
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Shorthand for [`FirKernel::new`].
pub fn make_kernel(skip: usize, sample_interval_s: f64) -> Result<FirKernel, FilterError> {
    FirKernel::new(skip, sample_interval_s)
}

/// Same-length convolution `(x ∗ b)[n] = Σ_k b[k]·x[n−k]` with zeros outside
/// the input. Only the two nonzero taps are evaluated.
pub fn apply_filter(x: &[f64], kernel: &FirKernel) -> Vec<f64> {
    let l = kernel.skip;
    let lead = kernel.coefficient(-(l as isize));
    let lag = kernel.coefficient(l as isize);
    let n = x.len();
    (0..n)
        .map(|i| {
            let ahead = if i + l < n { x[i + l] } else { 0.0 };
            let behind = if i >= l { x[i - l] } else { 0.0 };
            lead * ahead + lag * behind
        })
        .collect()
}

/// Closed-form response `j·sin(L·Ω)/(L·Ts)` at each frequency.
pub fn frequency_response(
    kernel: &FirKernel,
    freqs_hz: &[f64],
    sampling_rate_hz: f64,
) -> Result<Vec<Complex64>, FilterError> {
    let nyquist_hz = sampling_rate_hz / 2.0;
    let l = kernel.skip as f64;
    freqs_hz
        .iter()
        .map(|&f| {
            if !(f.is_finite() && (0.0..=nyquist_hz).contains(&f)) {
                return Err(FilterError::FrequencyOutOfRange {
                    freq_hz: f,
                    nyquist_hz,
                });
            }
            let omega = 2.0 * std::f64::consts::PI * f / sampling_rate_hz;
            Ok(Complex64::new(0.0, (l * omega).sin() / (l * kernel.sample_interval_s)))
        })
        .collect()
}

/// `points` evenly spaced frequencies from 0 to Nyquist inclusive.
pub fn frequency_grid(sampling_rate_hz: f64, points: usize) -> Vec<f64> {
    let nyquist = sampling_rate_hz / 2.0;
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| {
                if i == points - 1 {
                    nyquist
                } else {
                    nyquist * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}
