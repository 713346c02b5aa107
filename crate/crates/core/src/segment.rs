//! Non-overlapping rectangular windows and their labels.

use ndarray::{s, Array2};
use thiserror::Error;

use crate::edf::{EegRecording, LabeledInterval};
use crate::Class;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("window length must be positive and finite, got {0} s")]
    InvalidWindow(f64),
    #[error("window of {window_len} samples exceeds the recording ({num_samples} samples)")]
    WindowTooLong {
        window_len: usize,
        num_samples: usize,
    },
}

/// One window of a recording: `window_len` samples × `M` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub samples: Array2<f64>,
    pub start_s: f64,
    pub index: usize,
    pub window_s: f64,
    pub label: Option<Class>,
}

impl Segment {
    pub fn window_len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn midpoint_s(&self) -> f64 {
        self.start_s + self.window_s / 2.0
    }

    pub fn channel(&self, index: usize) -> Vec<f64> {
        self.samples.column(index).to_vec()
    }
}

/// Samples per window: `round(Fs · window_s)`.
pub fn window_len(sampling_rate_hz: f64, window_s: f64) -> Result<usize, SegmentError> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(SegmentError::InvalidWindow(window_s));
    }
    let len = (sampling_rate_hz * window_s).round();
    if len < 1.0 {
        return Err(SegmentError::InvalidWindow(window_s));
    }
    Ok(len as usize)
}

/// Cut `recording` into `floor(N / W)` consecutive windows; the trailing
/// partial window is dropped.
pub fn segment(recording: &EegRecording, window_s: f64) -> Result<Vec<Segment>, SegmentError> {
    let w = window_len(recording.sampling_rate_hz(), window_s)?;
    let n = recording.num_samples();
    if w > n {
        return Err(SegmentError::WindowTooLong {
            window_len: w,
            num_samples: n,
        });
    }
    Ok((0..n / w)
        .map(|index| Segment {
            samples: recording
                .samples()
                .slice(s![index * w..(index + 1) * w, ..])
                .to_owned(),
            start_s: index as f64 * window_s,
            index,
            window_s,
            label: None,
        })
        .collect())
}

/// Label each segment `seizure` iff its midpoint falls in a seizure interval.
pub fn label_segments(mut segments: Vec<Segment>, intervals: &[LabeledInterval]) -> Vec<Segment> {
    for seg in &mut segments {
        let mid = seg.midpoint_s();
        let ictal = intervals
            .iter()
            .any(|iv| iv.label == Class::Seizure && iv.contains(mid));
        seg.label = Some(if ictal { Class::Seizure } else { Class::NonSeizure });
    }
    segments
}

/// Group segments into epochs.
///
/// The interval boundaries split the recording into maximal runs of
/// consecutive segments whose midpoints share the same containing interval
/// (or lie outside all of them). Runs are numbered from `first_id` upward in
/// time order.
pub fn epoch_ids(segments: &[Segment], intervals: &[LabeledInterval], first_id: usize) -> Vec<usize> {
    let mut ids = Vec::with_capacity(segments.len());
    let mut current = first_id;
    let mut previous: Option<Option<usize>> = None;
    for seg in segments {
        let mid = seg.midpoint_s();
        let owner = intervals.iter().position(|iv| iv.contains(mid));
        if let Some(prev) = previous {
            if prev != owner {
                current += 1;
            }
        }
        previous = Some(owner);
        ids.push(current);
    }
    ids
}
