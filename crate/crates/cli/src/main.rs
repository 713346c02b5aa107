//! `detect`: run the seizure detection pipeline or any one of its stages.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for bad input
//! data, 4 when a numerical stage degenerates.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eegfit::edf;
use eegfit::eval::CvConfig;
use eegfit::features::RSquare;
use eegfit::fit::Weighting;
use eegfit::forest::ForestConfig;
use eegfit::io;
use eegfit::pipeline::{
    self, ConfigError, FeatureSettings, FitScope, InputSource, LabeledRecording, PipelineConfig,
    RecordedInput,
};
use eegfit::synth::SyntheticSpec;
use eegfit::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "detect", version, about = "EEG seizure detection by curve fitting")]
struct Cli {
    /// Directory for outputs not given an explicit path [default: detect-out].
    #[arg(long, global = true, env = "DETECT_OUTPUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the header and annotations of an EDF recording as JSON.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ann: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<String>>,
    },
    /// Write a surrogate recording as EDF plus an annotation CSV.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        edf: Option<PathBuf>,
        #[arg(long)]
        ann: Option<PathBuf>,
    },
    /// Describe the differentiator and optionally dump |H(f)|.
    Filter {
        #[arg(long, default_value_t = 256.0)]
        fs: f64,
        #[arg(long)]
        skip_factor: Option<usize>,
        #[arg(long)]
        dump_response: Option<PathBuf>,
    },
    /// Fit the parabolic model and write the coefficients with their bounds.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "segment")]
        fit_scope: FitScope,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one goodness-of-fit feature row per channel and segment.
    Features {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the scaler and forest on every labeled row of a features CSV.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        scaler: Option<PathBuf>,
    },
    /// Cross-validate on a features CSV.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run every stage and write all artifacts into the output directory.
    Pipeline {
        /// Pipeline config JSON; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long)]
        fit_scope: Option<FitScope>,
        #[arg(long)]
        write_fits: bool,
        #[arg(long)]
        write_response: bool,
    },
}

#[derive(Args, Default)]
struct InputArgs {
    /// EDF recording.
    #[arg(long = "in", conflicts_with = "synthetic")]
    input: Option<PathBuf>,
    /// Annotation CSV for `--in`.
    #[arg(long, requires = "input")]
    ann: Option<PathBuf>,
    /// Synthetic recording spec JSON.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    window_seconds: Option<f64>,
    #[arg(long)]
    skip_factor: Option<usize>,
    /// uniform | block_variance
    #[arg(long, value_parser = parse_weighting)]
    weighting: Option<Weighting>,
    /// ratio_of_sums | per_point_ratio
    #[arg(long, value_parser = parse_r_square)]
    r_square: Option<RSquare>,
}

#[derive(Args, Default)]
struct ForestArgs {
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long)]
    min_node: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Args, Default)]
struct CvArgs {
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    group_by_epoch: bool,
}

fn parse_weighting(s: &str) -> std::result::Result<Weighting, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_r_square(s: &str) -> std::result::Result<RSquare, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

impl ForestArgs {
    fn apply(&self, mut f: ForestConfig) -> ForestConfig {
        if let Some(t) = self.trees {
            f.trees = t;
        }
        if let Some(m) = self.mtry {
            f.m_try = m;
        }
        if let Some(m) = self.min_node {
            f.min_node_size = m;
        }
        if self.max_depth.is_some() {
            f.max_depth = self.max_depth;
        }
        f
    }
}

impl CvArgs {
    fn apply(&self, mut cv: CvConfig) -> CvConfig {
        if let Some(k) = self.folds {
            cv.folds = k;
        }
        if let Some(r) = self.repeats {
            cv.repeats = r;
        }
        cv.group_by_epoch |= self.group_by_epoch;
        cv
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    ConfigError::Invalid(msg.into()).into()
}

impl InputArgs {
    fn source(&self) -> Result<Option<InputSource>> {
        if let Some(path) = &self.synthetic {
            let spec: SyntheticSpec = io::read_json(path)?;
            return Ok(Some(InputSource::Synthetic(spec)));
        }
        Ok(self.input.as_ref().map(|edf| {
            InputSource::Recorded(vec![RecordedInput {
                edf: edf.clone(),
                annotations: self.ann.clone(),
            }])
        }))
    }

    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        if let Some(src) = self.source()? {
            cfg.input = src;
        }
        if self.channels.is_some() {
            cfg.channels = self.channels.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let f = &mut cfg.features;
        if let Some(w) = self.window_seconds {
            f.window_seconds = w;
        }
        if self.skip_factor.is_some() {
            f.skip_factor = self.skip_factor;
        }
        if let Some(w) = self.weighting {
            f.weighting = w;
        }
        if let Some(r) = self.r_square {
            f.r_square = r;
        }
        Ok(())
    }

    /// A config built from flags alone.
    fn config(&self) -> Result<PipelineConfig> {
        let input = self
            .source()?
            .ok_or_else(|| invalid("give an input with --in or --synthetic"))?;
        let mut cfg = PipelineConfig {
            input,
            channels: None,
            features: FeatureSettings::default(),
            fit_scope: FitScope::default(),
            forest: ForestConfig::default(),
            cv: CvConfig::default(),
            output_dir: None,
            seed: 0,
            write_fits: false,
            write_response: false,
        };
        self.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(&self) -> Result<(PipelineConfig, Vec<LabeledRecording>)> {
        let cfg = self.config()?;
        let recs = pipeline::load_input(&cfg).map_err(|e| e.in_stage("ingest"))?;
        Ok((cfg, recs))
    }
}

fn out_path(explicit: &Option<PathBuf>, dir: &Path, name: &str) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.clone());
    }
    std::fs::create_dir_all(dir).map_err(|source| io::IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.join(name))
}

fn run(cli: Cli) -> Result<()> {
    let chosen_dir = cli.out_dir;
    let dir = chosen_dir.clone().unwrap_or_else(|| PathBuf::from("detect-out"));
    match cli.command {
        Command::Ingest { input, ann, channels } => {
            let rec = pipeline::load_recorded(
                &RecordedInput {
                    edf: input.clone(),
                    annotations: ann,
                },
                channels.as_deref(),
            )?;
            let file = std::fs::File::open(&input).map_err(|source| io::IoError::File {
                path: input.clone(),
                source,
            })?;
            let mut bytes = Vec::new();
            std::io::Read::read_to_end(&mut std::io::BufReader::new(file), &mut bytes).map_err(|source| {
                io::IoError::File {
                    path: input.clone(),
                    source,
                }
            })?;
            let header = edf::parse_edf_header(&bytes)?;
            let summary = serde_json::json!({
                "header": header,
                "selected_channels": rec.recording.channel_labels(),
                "sampling_rate_hz": rec.recording.sampling_rate_hz(),
                "num_samples": rec.recording.num_samples(),
                "duration_s": rec.recording.duration_s(),
                "annotations": rec.intervals,
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("JSON values serialize"));
        }
        Command::Synth { spec, seed, edf: edf_out, ann } => {
            let spec: SyntheticSpec = io::read_json(&spec)?;
            let rec = pipeline::synthesize(&spec, seed)?;
            let edf_path = out_path(&edf_out, &dir, "synthetic.edf")?;
            let ann_path = out_path(&ann, &dir, "synthetic.csv")?;
            edf::write_edf(&rec.recording, io::create(&edf_path)?)?;
            edf::write_annotations(&rec.intervals, io::create(&ann_path)?)?;
            println!("wrote {} and {}", edf_path.display(), ann_path.display());
        }
        Command::Filter {
            fs,
            skip_factor,
            dump_response,
        } => {
            let kernel = eegfit::filter::FirKernel::for_sampling_rate(fs, skip_factor)?;
            println!(
                "L={} taps={} b[-L]={} b[+L]={} first_null_hz={}",
                kernel.skip(),
                kernel.len(),
                kernel.coefficient(-(kernel.skip() as isize)),
                kernel.coefficient(kernel.skip() as isize),
                fs / (2.0 * kernel.skip() as f64)
            );
            if let Some(path) = dump_response {
                pipeline::write_response(&path, fs, skip_factor)?;
            }
        }
        Command::Fit { input, fit_scope, out } => {
            let (cfg, recs) = input.load()?;
            let mut fits = Vec::new();
            let mut next = 0;
            for rec in &recs {
                let e = pipeline::extract(rec, &cfg.features, next).map_err(|e| e.in_stage("fit"))?;
                fits.extend(match fit_scope {
                    FitScope::Segment => e.fits,
                    FitScope::Epoch => pipeline::epoch_fits(rec, &cfg.features, next).map_err(|e| e.in_stage("fit"))?,
                });
                next = e.next_epoch;
            }
            let path = out_path(&out, &dir, "fits.csv")?;
            io::write_fits(&path, &fits)?;
            println!("{} fits -> {}", fits.len(), path.display());
        }
        Command::Features { input, out } => {
            let (cfg, recs) = input.load()?;
            let ex = pipeline::extract_all(&recs, &cfg.features).map_err(|e| e.in_stage("features"))?;
            let path = out_path(&out, &dir, "features.csv")?;
            io::write_features(&path, &ex.features)?;
            println!("{} rows -> {}", ex.features.len(), path.display());
        }
        Command::Train {
            features,
            forest,
            seed,
            model,
            scaler,
        } => {
            let rows = io::read_features(&features)?;
            let forest = forest.apply(ForestConfig::default());
            let (fitted_scaler, fitted_model) = pipeline::train_final(&rows, &forest, seed).map_err(|e| e.in_stage("train"))?;
            io::write_json(&out_path(&model, &dir, "model.json")?, &fitted_model)?;
            io::write_json(&out_path(&scaler, &dir, "scaler.json")?, &fitted_scaler)?;
            let oob = fitted_model
                .oob_error
                .map_or_else(|| "undefined".to_string(), |e| format!("{e:.4}"));
            println!("trees={} oob_error={oob}", fitted_model.num_trees);
        }
        Command::Evaluate {
            features,
            forest,
            cv,
            seed,
            report,
        } => {
            let rows = io::read_features(&features)?;
            let forest = forest.apply(ForestConfig::default());
            let cv = cv.apply(CvConfig::default());
            let r = pipeline::evaluate(&rows, &cv, &forest, seed).map_err(|e| e.in_stage("evaluate"))?;
            let path = out_path(&report, &dir, "report.json")?;
            io::write_json(&path, &r)?;
            io::write_report_csv(&path.with_extension("csv"), &r)?;
            println!("{}", r.summary_line());
        }
        Command::Pipeline {
            config,
            input,
            forest,
            cv,
            fit_scope,
            write_fits,
            write_response,
        } => {
            let mut cfg = match &config {
                Some(path) => {
                    let mut c = PipelineConfig::load(path)?;
                    input.apply(&mut c)?;
                    c
                }
                None => input.config()?,
            };
            cfg.forest = forest.apply(cfg.forest);
            cfg.cv = cv.apply(cfg.cv);
            if let Some(s) = fit_scope {
                cfg.fit_scope = s;
            }
            cfg.write_fits |= write_fits;
            cfg.write_response |= write_response;
            if chosen_dir.is_some() || cfg.output_dir.is_none() {
                cfg.output_dir = Some(dir);
            }
            let outcome = pipeline::run_pipeline(&cfg)?;
            println!("{}", outcome.summary_line());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}
