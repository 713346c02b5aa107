//! CSV and JSON artifacts exchanged between stages.
//!
//! All CSV files have a header row, `.` decimals and LF line endings.
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the values bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureVector, GoodnessOfFit, Provenance};
use crate::fit::FitResult;
use crate::forest::ForestModel;
use crate::Class;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> IoError + '_ {
    move |source| IoError::Json {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(file_err(path))
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(file_err(path))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(file_err(path))
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(file_err(path))?;
    csv::Reader::from_reader(BufReader::new(file))
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(path))
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureRow {
    epoch: usize,
    channel: usize,
    segment: usize,
    label: Option<Class>,
    zeta: f64,
    phi: f64,
    sigma_adj: f64,
    psi: f64,
}

/// `epoch,channel,segment,label,zeta,phi,sigma_adj,psi`; an empty label
/// means unlabeled.
pub fn write_features(path: &Path, features: &[FeatureVector]) -> Result<(), IoError> {
    write_csv(
        path,
        features.iter().map(|v| FeatureRow {
            epoch: v.provenance.epoch,
            channel: v.provenance.channel,
            segment: v.provenance.segment,
            label: v.label,
            zeta: v.stats.zeta,
            phi: v.stats.phi,
            sigma_adj: v.stats.sigma_adj,
            psi: v.stats.psi,
        }),
    )
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector>, IoError> {
    Ok(read_csv::<FeatureRow>(path)?
        .into_iter()
        .map(|r| FeatureVector {
            provenance: Provenance {
                epoch: r.epoch,
                channel: r.channel,
                segment: r.segment,
            },
            label: r.label,
            stats: GoodnessOfFit {
                zeta: r.zeta,
                phi: r.phi,
                sigma_adj: r.sigma_adj,
                psi: r.psi,
            },
        })
        .collect())
}

/// A fit together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub provenance: Provenance,
    pub fit: FitResult,
}

#[derive(Debug, Serialize)]
struct FitRow {
    epoch: usize,
    channel: usize,
    segment: usize,
    a: f64,
    b: f64,
    c: f64,
    a_lo: f64,
    a_hi: f64,
    b_lo: f64,
    b_hi: f64,
    c_lo: f64,
    c_hi: f64,
}

/// `epoch,channel,segment,a,b,c,a_lo,a_hi,b_lo,b_hi,c_lo,c_hi`.
pub fn write_fits(path: &Path, fits: &[FitRecord]) -> Result<(), IoError> {
    write_csv(
        path,
        fits.iter().map(|r| {
            let [a, b, c] = r.fit.cb95;
            FitRow {
                epoch: r.provenance.epoch,
                channel: r.provenance.channel,
                segment: r.provenance.segment,
                a: r.fit.a,
                b: r.fit.b,
                c: r.fit.c,
                a_lo: a.lo,
                a_hi: a.hi,
                b_lo: b.lo,
                b_hi: b.hi,
                c_lo: c.lo,
                c_hi: c.hi,
            }
        }),
    )
}

#[derive(Debug, Serialize)]
struct ResponseRow {
    freq_hz: f64,
    magnitude: f64,
}

/// `freq_hz,magnitude` for plotting `|H(f)|`.
pub fn write_response(path: &Path, freqs_hz: &[f64], response: &[Complex64]) -> Result<(), IoError> {
    write_csv(
        path,
        freqs_hz.iter().zip(response).map(|(&freq_hz, h)| ResponseRow {
            freq_hz,
            magnitude: h.norm(),
        }),
    )
}

/// Per-repeat metrics as CSV; undefined rates are written as `undefined`.
pub fn write_report_csv(path: &Path, report: &crate::eval::EvalReport) -> Result<(), IoError> {
    let mut out = create(path)?;
    let rate = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:?}"));
    let mut text = String::from("repeat,tp,fn,tn,fp,tpr,tnr,fpr,accuracy\n");
    for (r, m) in report.per_repeat.iter().enumerate() {
        let c = m.counts;
        text.push_str(&format!(
            "{r},{},{},{},{},{},{},{},{}\n",
            c.tp,
            c.fn_,
            c.tn,
            c.fp,
            rate(m.tpr),
            rate(m.tnr),
            rate(m.fpr),
            rate(m.accuracy)
        ));
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(file_err(path))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(json_err(path))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(file_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// Load a forest. Deep trees nest beyond serde_json's default recursion
/// limit, so the limit is lifted here.
pub fn read_model(path: &Path) -> Result<ForestModel, IoError> {
    let text = read_to_string(path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    de.disable_recursion_limit();
    let model = ForestModel::deserialize(&mut de).map_err(json_err(path))?;
    de.end().map_err(json_err(path))?;
    Ok(model)
}
