//! Deterministic surrogate EEG with labeled seizure bursts.
//!
//! Background activity is first-order autoregressive noise (a one-pole
//! low-pass of white Gaussian noise) with unit stationary variance, scaled to
//! the requested amplitude. Inside every interval labeled `seizure` a
//! sinusoid at the seizure frequency is superimposed on each channel with a
//! random phase and a per-channel gain in `[0.8, 1.2]`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::edf::{EdfError, EegRecording, LabeledInterval};
use crate::{seed, Class};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    /// Standard deviation of the background in µV.
    pub amplitude_uv: f64,
    /// Lag-one autocorrelation of the noise, in `[0, 1)`. Zero gives white
    /// noise; values near one push power toward low frequencies.
    pub ar_coefficient: f64,
}

impl Default for Background {
    fn default() -> Self {
        Self {
            amplitude_uv: 20.0,
            ar_coefficient: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeizureMorphology {
    pub frequency_hz: f64,
    /// RMS of the superimposed oscillation in µV (before channel gain).
    pub amplitude_uv: f64,
}

impl Default for SeizureMorphology {
    fn default() -> Self {
        Self {
            frequency_hz: 4.0,
            amplitude_uv: 200.0,
        }
    }
}

fn default_fs() -> f64 {
    256.0
}

fn default_channels() -> usize {
    23
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub duration_s: f64,
    #[serde(default = "default_fs")]
    pub sampling_rate_hz: f64,
    #[serde(default = "default_channels")]
    pub num_channels: usize,
    #[serde(default)]
    pub background: Background,
    /// Annotated intervals. Only those labeled `seizure` receive a burst;
    /// `non_seizure` entries are passed through as annotations.
    #[serde(default, alias = "seizure_intervals")]
    pub intervals: Vec<LabeledInterval>,
    #[serde(default)]
    pub seizure: SeizureMorphology,
    #[serde(default)]
    pub rng_seed: u64,
}

impl SyntheticSpec {
    /// `pairs` control/seizure epoch pairs of `epoch_s` seconds each: every
    /// seizure epoch is immediately preceded by its non-seizure control.
    pub fn alternating_epochs(pairs: usize, epoch_s: f64) -> Self {
        let mut intervals = Vec::with_capacity(2 * pairs);
        for k in 0..pairs {
            let start = 2.0 * k as f64 * epoch_s;
            intervals.push(LabeledInterval::new(start, start + epoch_s, Class::NonSeizure));
            intervals.push(LabeledInterval::new(
                start + epoch_s,
                start + 2.0 * epoch_s,
                Class::Seizure,
            ));
        }
        Self {
            duration_s: 2.0 * pairs as f64 * epoch_s,
            sampling_rate_hz: default_fs(),
            num_channels: default_channels(),
            background: Background::default(),
            intervals,
            seizure: SeizureMorphology::default(),
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EdfError> {
        let bad = |msg: String| Err(EdfError::InvalidSpec(msg));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration {} s", self.duration_s));
        }
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return bad(format!("sampling rate {} Hz", self.sampling_rate_hz));
        }
        if self.num_channels == 0 {
            return bad("zero channels".into());
        }
        if (self.duration_s * self.sampling_rate_hz).round() < 1.0 {
            return bad("recording would have no samples".into());
        }
        let b = &self.background;
        if !(b.amplitude_uv.is_finite() && b.amplitude_uv >= 0.0) {
            return bad(format!("background amplitude {}", b.amplitude_uv));
        }
        if !(0.0..1.0).contains(&b.ar_coefficient) {
            return bad(format!("AR coefficient {} outside [0, 1)", b.ar_coefficient));
        }
        let s = &self.seizure;
        if !(s.amplitude_uv.is_finite() && s.amplitude_uv >= 0.0) {
            return bad(format!("seizure amplitude {}", s.amplitude_uv));
        }
        if !(s.frequency_hz > 0.0 && s.frequency_hz < self.sampling_rate_hz / 2.0) {
            return bad(format!(
                "seizure frequency {} Hz outside (0, Fs/2)",
                s.frequency_hz
            ));
        }
        crate::edf::validate_intervals(&self.intervals, self.duration_s)
    }
}

/// Generate the recording described by `spec` and return it with its
/// annotations (equal to `spec.intervals`).
pub fn synthesize_recording(
    spec: &SyntheticSpec,
) -> Result<(EegRecording, Vec<LabeledInterval>), EdfError> {
    spec.validate()?;
    let fs = spec.sampling_rate_hz;
    let n = (spec.duration_s * fs).round() as usize;
    let m = spec.num_channels;
    let alpha = spec.background.ar_coefficient;
    let innovation = (1.0 - alpha * alpha).sqrt();
    let bursts: Vec<&LabeledInterval> = spec
        .intervals
        .iter()
        .filter(|iv| iv.label == Class::Seizure)
        .collect();
    let omega = 2.0 * std::f64::consts::PI * spec.seizure.frequency_hz;
    let peak = std::f64::consts::SQRT_2 * spec.seizure.amplitude_uv;

    let mut samples = Array2::<f64>::zeros((n, m));
    for ch in 0..m {
        let mut rng = seed::rng(seed::derive(spec.rng_seed, ch as u64));
        let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
        let gain = rng.random_range(0.8..1.2);
        let mut state: f64 = StandardNormal.sample(&mut rng);
        for i in 0..n {
            if i > 0 {
                let e: f64 = StandardNormal.sample(&mut rng);
                state = alpha * state + innovation * e;
            }
            let t = i as f64 / fs;
            let mut x = spec.background.amplitude_uv * state;
            if bursts.iter().any(|iv| iv.contains(t)) {
                x += gain * peak * (omega * t + phase).sin();
            }
            samples[[i, ch]] = x;
        }
    }
    let labels = (0..m).map(|c| format!("S{:02}", c + 1)).collect();
    let recording = EegRecording::new(samples, fs, labels)?;
    Ok((recording, spec.intervals.clone()))
}
