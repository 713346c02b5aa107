//! End-to-end orchestration: ingest → segment → filter → fit → features →
//! cross-validate and train.
//!
//! Every random choice is derived from one master seed through fixed
//! streams: [`SYNTH_STREAM`] for surrogate data, [`CV_STREAM`] for the
//! cross-validation and [`MODEL_STREAM`] for the final model. Running the
//! stages one by one with the same seed therefore reproduces the monolithic
//! run.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edf::{self, EegRecording, LabeledInterval};
use crate::eval::{cross_validate, CvConfig, EvalReport};
use crate::features::{fit_scaler, gof_with, FeatureScaler, FeatureVector, Provenance, RSquare, NUM_FEATURES};
use crate::filter::{apply_filter, frequency_grid, frequency_response, FirKernel};
use crate::fit::{fit_model, predict, quadratic_pairs, FitResult, Weighting, NUM_COEFFICIENTS};
use crate::forest::{train_forest, Dataset, ForestConfig, ForestModel};
use crate::io::{self, FitRecord};
use crate::segment::{epoch_ids, label_segments, segment};
use crate::synth::{synthesize_recording, SyntheticSpec};
use crate::{par, seed, Error, Result};

pub const SYNTH_STREAM: u64 = 0;
pub const CV_STREAM: u64 = 1;
pub const MODEL_STREAM: u64 = 2;

/// Points on the `0..=Fs/2` grid of the dumped frequency response.
pub const RESPONSE_POINTS: usize = 1024;

/// Marker left in the output directory while a run is in progress or
/// after it failed.
pub const INCOMPLETE_MARKER: &str = ".incomplete";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("input file {0} does not exist")]
    MissingInput(PathBuf),
    #[error("no output directory given")]
    NoOutputDir,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    /// One fit per channel and segment.
    #[default]
    Segment,
    /// One fit per channel over the concatenated filtered segments of an epoch.
    Epoch,
}

impl std::str::FromStr for FitScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "segment" => Ok(FitScope::Segment),
            "epoch" => Ok(FitScope::Epoch),
            other => Err(format!("unknown fit scope `{other}` (segment|epoch)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordedInput {
    pub edf: PathBuf,
    /// `onset_s,offset_s,label` CSV; without it every segment is non-seizure.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Recorded(Vec<RecordedInput>),
    Synthetic(SyntheticSpec),
}

/// Settings that shape the feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    pub window_seconds: f64,
    /// Overrides `round(Fs / 5)`.
    pub skip_factor: Option<usize>,
    pub weighting: Weighting,
    pub r_square: RSquare,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            window_seconds: 1.0,
            skip_factor: None,
            weighting: Weighting::Uniform,
            r_square: RSquare::RatioOfSums,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputSource,
    /// Channel labels to keep, in order; all channels when absent.
    #[serde(default)]
    pub channels: Option<Vec<String>>,
    #[serde(default, flatten)]
    pub features: FeatureSettings,
    #[serde(default)]
    pub fit_scope: FitScope,
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Also write `fits.csv`.
    #[serde(default)]
    pub write_fits: bool,
    /// Also write `response.csv`.
    #[serde(default)]
    pub write_response: bool,
}

impl PipelineConfig {
    pub fn from_json(text: &str, path: &Path) -> std::result::Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        Ok(Self::from_json(&text, path)?)
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        match &self.input {
            InputSource::Recorded(list) => {
                if list.is_empty() {
                    return Err(ConfigError::Invalid("no recordings listed".into()));
                }
                for r in list {
                    for p in std::iter::once(&r.edf).chain(r.annotations.as_ref()) {
                        if !p.exists() {
                            return Err(ConfigError::MissingInput(p.clone()));
                        }
                    }
                }
            }
            InputSource::Synthetic(spec) => {
                spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        let w = self.features.window_seconds;
        if !(w.is_finite() && w > 0.0) {
            return Err(ConfigError::Invalid(format!("window_seconds = {w}")));
        }
        if self.features.skip_factor == Some(0) {
            return Err(ConfigError::Invalid("skip_factor must be at least 1".into()));
        }
        Ok(())
    }
}

/// A recording with its annotations.
#[derive(Debug, Clone)]
pub struct LabeledRecording {
    pub recording: EegRecording,
    pub intervals: Vec<LabeledInterval>,
}

/// Surrogate recording with its generator seed taken from the master seed.
pub fn synthesize(spec: &SyntheticSpec, master_seed: u64) -> Result<LabeledRecording> {
    let spec = SyntheticSpec {
        rng_seed: seed::derive(master_seed, SYNTH_STREAM),
        ..spec.clone()
    };
    let (recording, intervals) = synthesize_recording(&spec)?;
    Ok(LabeledRecording { recording, intervals })
}

pub fn load_recorded(input: &RecordedInput, channels: Option<&[String]>) -> Result<LabeledRecording> {
    let file = File::open(&input.edf).map_err(|source| io::IoError::File {
        path: input.edf.clone(),
        source,
    })?;
    let (_, recording) = edf::read_recording(std::io::BufReader::new(file), channels)?;
    let intervals = match &input.annotations {
        Some(p) => edf::load_annotations(&io::read_to_string(p)?)?,
        None => Vec::new(),
    };
    edf::validate_intervals(&intervals, recording.duration_s())?;
    Ok(LabeledRecording { recording, intervals })
}

pub fn load_input(config: &PipelineConfig) -> Result<Vec<LabeledRecording>> {
    match &config.input {
        InputSource::Recorded(list) => list
            .iter()
            .map(|r| load_recorded(r, config.channels.as_deref()))
            .collect(),
        InputSource::Synthetic(spec) => Ok(vec![synthesize(spec, config.seed)?]),
    }
}

/// Features, per-segment fits and epoch ids of one recording.
#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub features: Vec<FeatureVector>,
    pub fits: Vec<FitRecord>,
    /// Epoch id after the last one used.
    pub next_epoch: usize,
}

struct Block {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

fn fit_block(filtered: Vec<f64>, weighting: Weighting) -> Result<(Block, FitResult)> {
    let pairs = weighting.apply(quadratic_pairs(&filtered)?)?;
    let fit = fit_model(&pairs)?;
    let block = Block {
        x: pairs.x().to_vec(),
        y: pairs.y().to_vec(),
        w: pairs.weights().to_vec(),
    };
    Ok((block, fit))
}

/// Segment, filter, fit and score every (segment, channel) of a recording.
/// Rows are ordered by segment, then channel.
pub fn extract(rec: &LabeledRecording, settings: &FeatureSettings, first_epoch: usize) -> Result<Extraction> {
    let recording = &rec.recording;
    let kernel = FirKernel::for_sampling_rate(recording.sampling_rate_hz(), settings.skip_factor)?;
    let segments = label_segments(segment(recording, settings.window_seconds)?, &rec.intervals);
    let epochs = epoch_ids(&segments, &rec.intervals, first_epoch);
    let m = recording.num_channels();

    let per_segment = par::map_range(segments.len(), |s| -> Result<Vec<(FeatureVector, FitRecord)>> {
        let seg = &segments[s];
        (0..m)
            .map(|ch| {
                let (block, fit) = fit_block(apply_filter(&seg.channel(ch), &kernel), settings.weighting)?;
                let yhat = predict(&fit, &block.x);
                let stats = gof_with(&block.y, &yhat, &block.w, NUM_COEFFICIENTS, settings.r_square)?;
                let provenance = Provenance {
                    epoch: epochs[s],
                    channel: ch,
                    segment: seg.index,
                };
                Ok((
                    FeatureVector::new(stats, provenance, seg.label),
                    FitRecord { provenance, fit },
                ))
            })
            .collect()
    });

    let mut out = Extraction {
        next_epoch: epochs.last().map_or(first_epoch, |e| e + 1),
        ..Default::default()
    };
    for rows in per_segment {
        for (f, r) in rows? {
            out.features.push(f);
            out.fits.push(r);
        }
    }
    Ok(out)
}

/// One fit per (epoch, channel) over the concatenated filtered segments.
/// The `segment` field of each record holds the epoch's first segment.
pub fn epoch_fits(rec: &LabeledRecording, settings: &FeatureSettings, first_epoch: usize) -> Result<Vec<FitRecord>> {
    let recording = &rec.recording;
    let kernel = FirKernel::for_sampling_rate(recording.sampling_rate_hz(), settings.skip_factor)?;
    let segments = segment(recording, settings.window_seconds)?;
    let epochs = epoch_ids(&segments, &rec.intervals, first_epoch);
    let mut runs: Vec<(usize, Vec<usize>)> = Vec::new();
    for (s, &e) in epochs.iter().enumerate() {
        match runs.last_mut() {
            Some((id, members)) if *id == e => members.push(s),
            _ => runs.push((e, vec![s])),
        }
    }
    let m = recording.num_channels();
    let work: Vec<(usize, usize)> = runs
        .iter()
        .enumerate()
        .flat_map(|(r, _)| (0..m).map(move |ch| (r, ch)))
        .collect();
    par::map(&work, |&(r, ch)| -> Result<FitRecord> {
        let (epoch, members) = &runs[r];
        let filtered: Vec<f64> = members
            .iter()
            .flat_map(|&s| apply_filter(&segments[s].channel(ch), &kernel))
            .collect();
        let (_, fit) = fit_block(filtered, settings.weighting)?;
        Ok(FitRecord {
            provenance: Provenance {
                epoch: *epoch,
                channel: ch,
                segment: segments[members[0]].index,
            },
            fit,
        })
    })
    .into_iter()
    .collect()
}

/// Features of all recordings, with epoch ids continuing across files.
pub fn extract_all(recs: &[LabeledRecording], settings: &FeatureSettings) -> Result<Extraction> {
    let mut all = Extraction::default();
    for rec in recs {
        let e = extract(rec, settings, all.next_epoch)?;
        all.features.extend(e.features);
        all.fits.extend(e.fits);
        all.next_epoch = e.next_epoch;
    }
    Ok(all)
}

/// Cross-validation with the seed stream used by the pipeline.
pub fn evaluate(features: &[FeatureVector], cv: &CvConfig, forest: &ForestConfig, master_seed: u64) -> Result<EvalReport> {
    Ok(cross_validate(features, cv, forest, seed::derive(master_seed, CV_STREAM))?)
}

/// Scaler and forest fit on every labeled row.
pub fn train_final(
    features: &[FeatureVector],
    forest: &ForestConfig,
    master_seed: u64,
) -> Result<(FeatureScaler, ForestModel)> {
    let labeled: Vec<&FeatureVector> = features.iter().filter(|v| v.label.is_some()).collect();
    let scaler = fit_scaler(labeled.iter().copied())?;
    let mut values = Vec::with_capacity(labeled.len() * NUM_FEATURES);
    for v in &labeled {
        values.extend(scaler.scale_values(v.values()));
    }
    let labels = labeled.iter().filter_map(|v| v.label).collect();
    let data = Dataset::new(NUM_FEATURES, values, labels)?;
    let model = train_forest(&data, forest, seed::derive(master_seed, MODEL_STREAM))?;
    Ok((scaler, model))
}

/// Write `response.csv` for the kernel used on `fs`.
pub fn write_response(path: &Path, fs: f64, skip_factor: Option<usize>) -> Result<()> {
    let kernel = FirKernel::for_sampling_rate(fs, skip_factor)?;
    let grid = frequency_grid(fs, RESPONSE_POINTS);
    let h = frequency_response(&kernel, &grid, fs)?;
    Ok(io::write_response(path, &grid, &h)?)
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub output_dir: PathBuf,
    pub report: EvalReport,
    pub oob_error: Option<f64>,
    pub rows: usize,
}

impl PipelineOutcome {
    pub fn summary_line(&self) -> String {
        let oob = self
            .oob_error
            .map_or_else(|| "undefined".to_string(), |e| format!("{e:.4}"));
        format!("{} oob_error={oob}", self.report.summary_line())
    }
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

/// Run every stage and write the artifacts into the output directory:
/// `features.csv`, `report.json`, `report.csv`, `model.json`,
/// `scaler.json`, and optionally `fits.csv` and `response.csv`.
///
/// A `.incomplete` marker exists in the directory until the run succeeds.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let dir = config.output_dir.clone().ok_or(ConfigError::NoOutputDir)?;
    let file_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::from(io::IoError::File { path, source })
    };
    std::fs::create_dir_all(&dir).map_err(file_err(&dir))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    std::fs::write(&marker, b"").map_err(file_err(&marker))?;

    let recs = staged("ingest", load_input(config))?;
    let extraction = staged("features", extract_all(&recs, &config.features))?;
    staged("features", Ok(io::write_features(&dir.join("features.csv"), &extraction.features)?))?;

    if config.write_fits {
        let fits = match config.fit_scope {
            FitScope::Segment => extraction.fits.clone(),
            FitScope::Epoch => {
                let mut all = Vec::new();
                let mut next = 0;
                for rec in &recs {
                    let segs = segment(&rec.recording, config.features.window_seconds)?;
                    all.extend(staged("fit", epoch_fits(rec, &config.features, next))?);
                    next = epoch_ids(&segs, &rec.intervals, next).last().map_or(next, |e| e + 1);
                }
                all
            }
        };
        staged("fit", Ok(io::write_fits(&dir.join("fits.csv"), &fits)?))?;
    }
    if config.write_response {
        let fs = recs[0].recording.sampling_rate_hz();
        staged("filter", write_response(&dir.join("response.csv"), fs, config.features.skip_factor))?;
    }

    let report = staged("evaluate", evaluate(&extraction.features, &config.cv, &config.forest, config.seed))?;
    staged("evaluate", Ok(io::write_json(&dir.join("report.json"), &report)?))?;
    staged("evaluate", Ok(io::write_report_csv(&dir.join("report.csv"), &report)?))?;

    let (scaler, model) = staged("train", train_final(&extraction.features, &config.forest, config.seed))?;
    staged("train", Ok(io::write_json(&dir.join("model.json"), &model)?))?;
    staged("train", Ok(io::write_json(&dir.join("scaler.json"), &scaler)?))?;

    std::fs::remove_file(&marker).map_err(file_err(&marker))?;
    Ok(PipelineOutcome {
        output_dir: dir,
        rows: extraction.features.len(),
        oob_error: model.oob_error,
        report,
    })
}
