//! Seizure detection in scalp EEG by curve fitting.
//!
//! The pipeline has five stages:
//!
//! 1. [`segment`]: split a recording into non-overlapping rectangular windows
//!    (one second by default) and label them from annotated intervals.
//! 2. [`filter`]: convolve each window with a sparse two-point central
//!    difference kernel whose skip factor defaults to `round(Fs / 5)`.
//! 3. [`fit`]: fit `y = a·sin(x − π) + b·(x − 10)² + c` to the couple
//!    `(x̃, x̃²)` by weighted linear least squares.
//! 4. [`features`]: turn each fit into the goodness-of-fit vector
//!    `[ζ, φ, σ_adj, ψ]` and min-max normalize it.
//! 5. [`forest`]: classify the vectors with a bagged random-subspace decision
//!    tree ensemble, evaluated by repeated k-fold cross-validation ([`eval`]).
//!
//! Input comes either from EDF files ([`edf`]) or from the deterministic
//! surrogate generator in [`synth`]. [`pipeline`] wires the stages together.
//!
//! With the default `parallel` feature, per-channel fitting, per-tree training
//! and cross-validation repeats run on the rayon global pool. Results do not
//! depend on the number of worker threads.

pub mod edf;
pub mod error;
pub mod eval;
pub mod features;
pub mod filter;
pub mod fit;
pub mod forest;
pub mod io;
mod par;
pub mod pipeline;
pub mod segment;
pub mod seed;
pub mod stats;
pub mod synth;

use serde::{Deserialize, Serialize};

pub use error::{Error, ErrorKind, Result};

/// Binary event class. `Seizure` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    NonSeizure = 0,
    Seizure = 1,
}

impl Class {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Class> {
        match i {
            0 => Some(Class::NonSeizure),
            1 => Some(Class::Seizure),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::NonSeizure => "non_seizure",
            Class::Seizure => "seizure",
        }
    }
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "seizure" | "1" => Ok(Class::Seizure),
            "non_seizure" | "non-seizure" | "nonseizure" | "0" => Ok(Class::NonSeizure),
            other => Err(format!("unknown class label `{other}`")),
        }
    }
}
