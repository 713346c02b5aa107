use thiserror::Error;

use crate::edf::EdfError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::filter::FilterError;
use crate::fit::FitError;
use crate::forest::ForestError;
use crate::io::IoError;
use crate::pipeline::ConfigError;
use crate::segment::SegmentError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error category, used to pick a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or arguments.
    Config,
    /// Malformed or inconsistent input data.
    Data,
    /// A numerical stage degenerated (rank deficiency, zero variation, ...).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Edf(#[from] EdfError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach the name of the pipeline stage that produced this error.
    pub fn in_stage(self, stage: &'static str) -> Error {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Stage { source, .. } => source.kind(),
            Error::Config(_) => ErrorKind::Config,
            Error::Filter(e) => match e {
                FilterError::InvalidSkip(_) | FilterError::InvalidInterval(_) => ErrorKind::Config,
                FilterError::FrequencyOutOfRange { .. } => ErrorKind::Config,
            },
            Error::Segment(SegmentError::InvalidWindow(_)) => ErrorKind::Config,
            Error::Segment(_) => ErrorKind::Data,
            Error::Fit(FitError::TooFewPoints(_)) => ErrorKind::Data,
            Error::Fit(_) => ErrorKind::Numerical,
            Error::Feature(FeatureError::ZeroTotalVariation) => ErrorKind::Numerical,
            Error::Feature(_) => ErrorKind::Data,
            Error::Forest(ForestError::InvalidConfig(_)) => ErrorKind::Config,
            Error::Forest(_) => ErrorKind::Data,
            Error::Eval(EvalError::BadK { .. }) | Error::Eval(EvalError::NoRepeats) => {
                ErrorKind::Config
            }
            Error::Eval(EvalError::Forest(ForestError::InvalidConfig(_))) => ErrorKind::Config,
            Error::Eval(_) => ErrorKind::Data,
            Error::Edf(_) | Error::Io(_) => ErrorKind::Data,
        }
    }
}
