//! EDF reading and writing, plus the seizure annotation sidecar format.
//!
//! Layout reference: <https://www.edfplus.info/specs/edf.html>. Only plain
//! 16-bit EDF is handled; EDF+ annotation channels are read as ordinary
//! signals if selected, and BDF is rejected by the version check.

use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Class;

const MAIN_HEADER_LEN: usize = 256;
const SIGNAL_HEADER_LEN: usize = 256;
const DIGITAL_MIN: i32 = i16::MIN as i32;
const DIGITAL_MAX: i32 = i16::MAX as i32;

#[derive(Debug, Error)]
pub enum EdfError {
    #[error("truncated header: need {needed} bytes, got {available}")]
    TruncatedHeader { needed: usize, available: usize },
    #[error("field `{field}` is not numeric: {value:?}")]
    NonNumericField { field: &'static str, value: String },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("header length field says {declared} bytes but {num_signals} signals need {expected}")]
    HeaderSizeMismatch {
        declared: usize,
        expected: usize,
        num_signals: usize,
    },
    #[error("selected channels have different sampling rates ({0:?} samples per record)")]
    MixedSamplingRates(Vec<usize>),
    #[error("unknown channel label `{0}`")]
    UnknownChannelLabel(String),
    #[error("data record {record} is truncated")]
    TruncatedRecord { record: usize },
    #[error("unsupported physical dimension `{0}`")]
    UnknownUnit(String),
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("cannot encode as EDF: {0}")]
    Unencodable(String),
    #[error("annotation line {line}: {message}")]
    AnnotationParse { line: usize, message: String },
    #[error("annotation [{onset_s}, {offset_s}) has offset not after onset")]
    OrderError { onset_s: f64, offset_s: f64 },
    #[error("annotations [{first_onset_s}, {first_offset_s}) and [{second_onset_s}, {second_offset_s}) overlap")]
    OverlapError {
        first_onset_s: f64,
        first_offset_s: f64,
        second_onset_s: f64,
        second_offset_s: f64,
    },
    #[error("annotation [{onset_s}, {offset_s}) lies outside the recording (0, {duration_s}]")]
    OutOfRecording {
        onset_s: f64,
        offset_s: f64,
        duration_s: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-signal part of an EDF header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
}

impl SignalHeader {
    /// Affine digital → physical map. Endpoints map exactly onto the
    /// physical range.
    pub fn to_physical(&self, digital: i32) -> f64 {
        let t = f64::from(digital - self.digital_min)
            / f64::from(self.digital_max - self.digital_min);
        self.physical_min * (1.0 - t) + self.physical_max * t
    }

    /// Physical value of one digital step.
    pub fn quantization_step(&self) -> f64 {
        (self.physical_max - self.physical_min) / f64::from(self.digital_max - self.digital_min)
    }

    /// Factor converting this signal's physical unit to microvolts.
    fn microvolt_scale(&self) -> Result<f64, EdfError> {
        let dim = self.physical_dimension.trim();
        match dim.to_ascii_lowercase().as_str() {
            // CHB-MIT convention: blank dimension means µV.
            "" | "uv" | "µv" | "μv" => Ok(1.0),
            "mv" => Ok(1e3),
            "v" => Ok(1e6),
            "nv" => Ok(1e-3),
            _ => Err(EdfError::UnknownUnit(dim.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    /// `None` when the date/time fields do not parse.
    pub start: Option<NaiveDateTime>,
    pub header_bytes: usize,
    /// `-1` means unknown (still being written).
    pub num_records: i64,
    pub record_duration_s: f64,
    pub signals: Vec<SignalHeader>,
}

impl RecordingHeader {
    pub fn num_signals(&self) -> usize {
        self.signals.len()
    }

    /// Bytes in one data record.
    pub fn record_len(&self) -> usize {
        2 * self.signals.iter().map(|s| s.samples_per_record).sum::<usize>()
    }

    pub fn sampling_rate(&self, signal: usize) -> f64 {
        self.signals[signal].samples_per_record as f64 / self.record_duration_s
    }
}

/// Multichannel EEG in microvolts: `samples` is `N` time steps × `M` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    samples: Array2<f64>,
    sampling_rate_hz: f64,
    channel_labels: Vec<String>,
}

impl EegRecording {
    pub fn new(
        samples: Array2<f64>,
        sampling_rate_hz: f64,
        channel_labels: Vec<String>,
    ) -> Result<Self, EdfError> {
        let (n, m) = samples.dim();
        if n == 0 || m == 0 {
            return Err(EdfError::InvalidRecording(format!("empty sample matrix {n}×{m}")));
        }
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(EdfError::InvalidRecording(format!(
                "sampling rate {sampling_rate_hz} is not positive"
            )));
        }
        if channel_labels.len() != m {
            return Err(EdfError::InvalidRecording(format!(
                "{} labels for {m} channels",
                channel_labels.len()
            )));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(EdfError::InvalidRecording(format!(
                "non-finite sample at flat index {pos}"
            )));
        }
        Ok(Self {
            samples,
            sampling_rate_hz,
            channel_labels,
        })
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn num_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn num_channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.num_samples() as f64 / self.sampling_rate_hz
    }

    /// One channel as a contiguous vector.
    pub fn channel(&self, index: usize) -> Vec<f64> {
        self.samples.column(index).to_vec()
    }
}

/// An annotated time span, `[onset_s, offset_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledInterval {
    pub onset_s: f64,
    pub offset_s: f64,
    pub label: Class,
}

impl LabeledInterval {
    pub fn new(onset_s: f64, offset_s: f64, label: Class) -> Self {
        Self {
            onset_s,
            offset_s,
            label,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.onset_s <= t && t < self.offset_s
    }
}

fn ascii_field(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).trim_end_matches([' ', '\0']).trim_start().to_string()
}

fn numeric_field<T: std::str::FromStr>(bytes: &[u8], field: &'static str) -> Result<T, EdfError> {
    let text = ascii_field(bytes);
    text.trim().parse().map_err(|_| EdfError::NonNumericField { field, value: text })
}

fn parse_start(date: &str, time: &str) -> Option<NaiveDateTime> {
    let mut d = date.split('.').map(|p| p.trim().parse::<u32>());
    let (day, month, yy) = (d.next()?.ok()?, d.next()?.ok()?, d.next()?.ok()?);
    // EDF clipping date: yy >= 85 is 19yy.
    let year = if yy >= 85 { 1900 + yy } else { 2000 + yy };
    let mut t = time.split('.').map(|p| p.trim().parse::<u32>());
    let (h, mi, s) = (t.next()?.ok()?, t.next()?.ok()?, t.next()?.ok()?);
    Some(NaiveDateTime::new(
        NaiveDate::from_ymd_opt(year as i32, month, day)?,
        NaiveTime::from_hms_opt(h, mi, s)?,
    ))
}

/// Decode the fixed-width ASCII header at the start of `bytes`.
pub fn parse_edf_header(bytes: &[u8]) -> Result<RecordingHeader, EdfError> {
    if bytes.len() < MAIN_HEADER_LEN {
        return Err(EdfError::TruncatedHeader {
            needed: MAIN_HEADER_LEN,
            available: bytes.len(),
        });
    }
    if bytes[0] == 0xFF {
        return Err(EdfError::InvalidRange("24-bit BDF files are not supported".into()));
    }
    let version = ascii_field(&bytes[0..8]);
    let patient_id = ascii_field(&bytes[8..88]);
    let recording_id = ascii_field(&bytes[88..168]);
    let start = parse_start(&ascii_field(&bytes[168..176]), &ascii_field(&bytes[176..184]));
    let header_bytes: usize = numeric_field(&bytes[184..192], "header_bytes")?;
    let num_records: i64 = numeric_field(&bytes[236..244], "num_records")?;
    let record_duration_s: f64 = numeric_field(&bytes[244..252], "record_duration")?;
    let num_signals: usize = numeric_field(&bytes[252..256], "num_signals")?;

    if num_signals == 0 {
        return Err(EdfError::InvalidRange("number of signals is 0".into()));
    }
    if num_records == 0 || num_records < -1 {
        return Err(EdfError::InvalidRange(format!("number of data records {num_records}")));
    }
    if !(record_duration_s.is_finite() && record_duration_s > 0.0) {
        return Err(EdfError::InvalidRange(format!("record duration {record_duration_s}")));
    }
    let expected = MAIN_HEADER_LEN + SIGNAL_HEADER_LEN * num_signals;
    if bytes.len() < expected {
        return Err(EdfError::TruncatedHeader {
            needed: expected,
            available: bytes.len(),
        });
    }
    if header_bytes != expected {
        return Err(EdfError::HeaderSizeMismatch {
            declared: header_bytes,
            expected,
            num_signals,
        });
    }

    // Signal fields are stored column-wise: all labels, then all transducers, ...
    let mut offset = MAIN_HEADER_LEN;
    let mut column = |width: usize| {
        let start = offset;
        offset += width * num_signals;
        (0..num_signals)
            .map(|i| &bytes[start + i * width..start + (i + 1) * width])
            .collect::<Vec<_>>()
    };
    let labels = column(16);
    let transducers = column(80);
    let dimensions = column(8);
    let phys_min = column(8);
    let phys_max = column(8);
    let dig_min = column(8);
    let dig_max = column(8);
    let prefilter = column(80);
    let spr = column(8);

    let mut signals = Vec::with_capacity(num_signals);
    for i in 0..num_signals {
        let signal = SignalHeader {
            label: ascii_field(labels[i]),
            transducer: ascii_field(transducers[i]),
            physical_dimension: ascii_field(dimensions[i]),
            physical_min: numeric_field(phys_min[i], "physical_min")?,
            physical_max: numeric_field(phys_max[i], "physical_max")?,
            digital_min: numeric_field(dig_min[i], "digital_min")?,
            digital_max: numeric_field(dig_max[i], "digital_max")?,
            prefiltering: ascii_field(prefilter[i]),
            samples_per_record: numeric_field(spr[i], "samples_per_record")?,
        };
        if signal.digital_min >= signal.digital_max {
            return Err(EdfError::InvalidRange(format!(
                "signal `{}`: digital min {} >= digital max {}",
                signal.label, signal.digital_min, signal.digital_max
            )));
        }
        if signal.physical_min == signal.physical_max {
            return Err(EdfError::InvalidRange(format!(
                "signal `{}`: physical min equals physical max",
                signal.label
            )));
        }
        if signal.samples_per_record == 0 {
            return Err(EdfError::InvalidRange(format!(
                "signal `{}`: zero samples per record",
                signal.label
            )));
        }
        signals.push(signal);
    }

    Ok(RecordingHeader {
        version,
        patient_id,
        recording_id,
        start,
        header_bytes,
        num_records,
        record_duration_s,
        signals,
    })
}

/// Read a whole EDF stream into physical units (µV).
///
/// `channels` selects signals by label, in the order given; the first signal
/// with a matching label wins. All selected signals must share one sampling
/// rate.
pub fn read_recording<R: Read, S: AsRef<str>>(
    mut source: R,
    channels: Option<&[S]>,
) -> Result<(RecordingHeader, EegRecording), EdfError> {
    let mut main = vec![0u8; MAIN_HEADER_LEN];
    let got = read_up_to(&mut source, &mut main)?;
    if got < MAIN_HEADER_LEN {
        return Err(EdfError::TruncatedHeader {
            needed: MAIN_HEADER_LEN,
            available: got,
        });
    }
    let num_signals: usize = numeric_field(&main[252..256], "num_signals")?;
    let mut header_bytes = main;
    header_bytes.resize(MAIN_HEADER_LEN + SIGNAL_HEADER_LEN * num_signals, 0);
    let got = read_up_to(&mut source, &mut header_bytes[MAIN_HEADER_LEN..])?;
    header_bytes.truncate(MAIN_HEADER_LEN + got);
    let header = parse_edf_header(&header_bytes)?;

    let selected: Vec<usize> = match channels {
        None => (0..header.num_signals()).collect(),
        Some(wanted) => wanted
            .iter()
            .map(|w| {
                let w = w.as_ref().trim();
                header
                    .signals
                    .iter()
                    .position(|s| s.label == w)
                    .ok_or_else(|| EdfError::UnknownChannelLabel(w.to_string()))
            })
            .collect::<Result<_, _>>()?,
    };
    if selected.is_empty() {
        return Err(EdfError::InvalidRecording("no channels selected".into()));
    }
    let rates: Vec<usize> = selected
        .iter()
        .map(|&i| header.signals[i].samples_per_record)
        .collect();
    if rates.iter().any(|&r| r != rates[0]) {
        return Err(EdfError::MixedSamplingRates(rates));
    }
    let spr = rates[0];
    let scales: Vec<f64> = selected
        .iter()
        .map(|&i| header.signals[i].microvolt_scale())
        .collect::<Result<_, _>>()?;

    // Byte offset of each signal's block inside a record.
    let mut offsets = Vec::with_capacity(header.num_signals());
    let mut acc = 0usize;
    for s in &header.signals {
        offsets.push(acc);
        acc += 2 * s.samples_per_record;
    }
    let record_len = header.record_len();

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); selected.len()];
    let mut record = vec![0u8; record_len];
    let mut index = 0usize;
    loop {
        if header.num_records >= 0 && index as i64 == header.num_records {
            break;
        }
        let got = read_up_to(&mut source, &mut record)?;
        if got == 0 && header.num_records < 0 {
            break;
        }
        if got < record_len {
            return Err(EdfError::TruncatedRecord { record: index });
        }
        for (col, (&sig, &scale)) in selected.iter().zip(&scales).enumerate() {
            let signal = &header.signals[sig];
            let block = &record[offsets[sig]..offsets[sig] + 2 * spr];
            columns[col].extend(block.chunks_exact(2).map(|b| {
                signal.to_physical(i32::from(i16::from_le_bytes([b[0], b[1]]))) * scale
            }));
        }
        index += 1;
    }

    let n = columns[0].len();
    let m = columns.len();
    let flat: Vec<f64> = columns.into_iter().flatten().collect();
    let samples = Array2::from_shape_vec((m, n), flat)
        .expect("columns have equal length")
        .reversed_axes();
    let labels = selected
        .iter()
        .map(|&i| header.signals[i].label.clone())
        .collect();
    let fs = header.sampling_rate(selected[0]);
    let recording = EegRecording::new(samples.as_standard_layout().to_owned(), fs, labels)?;
    Ok((header, recording))
}

fn read_up_to<R: Read>(source: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

fn pad(out: &mut Vec<u8>, text: &str, width: usize) {
    let bytes: Vec<u8> = text.bytes().filter(u8::is_ascii).take(width).collect();
    out.extend_from_slice(&bytes);
    out.extend(std::iter::repeat_n(b' ', width - bytes.len()));
}

/// Shortest decimal that fits in `width` characters, rounded away from the
/// data range (`down` for a minimum, up for a maximum).
fn edf_number(value: f64, width: usize, down: bool) -> Result<String, EdfError> {
    for decimals in (0..=width).rev() {
        let scale = 10f64.powi(decimals as i32);
        let mut rounded = if down {
            (value * scale).floor() / scale
        } else {
            (value * scale).ceil() / scale
        };
        let mut text = format!("{rounded:.decimals$}");
        if text.len() > width {
            continue;
        }
        // Repair floor/ceil drift introduced by the decimal conversion.
        let parsed: f64 = text.parse().expect("formatted number parses");
        if (down && parsed > value) || (!down && parsed < value) {
            rounded += if down { -1.0 / scale } else { 1.0 / scale };
            text = format!("{rounded:.decimals$}");
            if text.len() > width {
                continue;
            }
        }
        return Ok(text);
    }
    Err(EdfError::Unencodable(format!("{value} does not fit in {width} characters")))
}

/// Encode a recording as 16-bit EDF with data records of one second.
///
/// When the sample count is not a whole number of seconds the recording is
/// written as a single data record. Samples are quantized to 65 536 levels
/// spanning each channel's range, so a round trip is exact to within one
/// quantization step.
pub fn write_edf<W: Write>(recording: &EegRecording, mut out: W) -> Result<(), EdfError> {
    let fs = recording.sampling_rate_hz();
    let n = recording.num_samples();
    let m = recording.num_channels();
    let (spr, num_records, duration) = if fs.fract() == 0.0 && n.is_multiple_of(fs as usize) {
        (fs as usize, n / fs as usize, "1".to_string())
    } else {
        (n, 1, edf_number(n as f64 / fs, 8, false)?)
    };
    let written_duration: f64 = duration.parse().expect("formatted number parses");
    if (spr as f64 / written_duration - fs).abs() > 1e-9 * fs {
        return Err(EdfError::Unencodable(format!(
            "sampling rate {fs} Hz is not representable with {spr} samples per record"
        )));
    }

    let mut ranges = Vec::with_capacity(m);
    for ch in 0..m {
        let col = recording.samples().column(ch);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo == hi { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        let lo_text = edf_number(lo, 8, true)?;
        let hi_text = edf_number(hi, 8, false)?;
        ranges.push((lo_text, hi_text));
    }

    let header_len = MAIN_HEADER_LEN + SIGNAL_HEADER_LEN * m;
    let mut h = Vec::with_capacity(header_len);
    pad(&mut h, "0", 8);
    pad(&mut h, "X X X X", 80);
    pad(&mut h, "Startdate X X X X", 80);
    pad(&mut h, "01.01.00", 8);
    pad(&mut h, "00.00.00", 8);
    pad(&mut h, &header_len.to_string(), 8);
    pad(&mut h, "", 44);
    pad(&mut h, &num_records.to_string(), 8);
    pad(&mut h, &duration, 8);
    pad(&mut h, &m.to_string(), 4);
    for label in recording.channel_labels() {
        pad(&mut h, label, 16);
    }
    for _ in 0..m {
        pad(&mut h, "", 80);
    }
    for _ in 0..m {
        pad(&mut h, "uV", 8);
    }
    for (lo, _) in &ranges {
        pad(&mut h, lo, 8);
    }
    for (_, hi) in &ranges {
        pad(&mut h, hi, 8);
    }
    for _ in 0..m {
        pad(&mut h, &DIGITAL_MIN.to_string(), 8);
    }
    for _ in 0..m {
        pad(&mut h, &DIGITAL_MAX.to_string(), 8);
    }
    for _ in 0..m {
        pad(&mut h, "", 80);
    }
    for _ in 0..m {
        pad(&mut h, &spr.to_string(), 8);
    }
    for _ in 0..m {
        pad(&mut h, "", 32);
    }
    debug_assert_eq!(h.len(), header_len);
    out.write_all(&h)?;

    let physical: Vec<(f64, f64)> = ranges
        .iter()
        .map(|(lo, hi)| (lo.parse().expect("number"), hi.parse().expect("number")))
        .collect();
    let span = f64::from(DIGITAL_MAX - DIGITAL_MIN);
    let mut record = Vec::with_capacity(2 * spr * m);
    for r in 0..num_records {
        record.clear();
        for (ch, &(lo, hi)) in physical.iter().enumerate() {
            for i in r * spr..(r + 1) * spr {
                let x = recording.samples()[[i, ch]];
                let d = ((x - lo) / (hi - lo) * span + f64::from(DIGITAL_MIN)).round();
                let d = d.clamp(f64::from(DIGITAL_MIN), f64::from(DIGITAL_MAX)) as i16;
                record.extend_from_slice(&d.to_le_bytes());
            }
        }
        out.write_all(&record)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct AnnotationRow {
    onset_s: f64,
    offset_s: f64,
    label: Class,
}

/// Parse the `onset_s,offset_s,label` sidecar CSV.
///
/// The header row is optional. Output is sorted by onset; offsets must come
/// after onsets and intervals must not overlap.
pub fn load_annotations(text: &str) -> Result<Vec<LabeledInterval>, EdfError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut intervals = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| EdfError::AnnotationParse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if i == 0 && record.get(0) == Some("onset_s") {
            continue;
        }
        let row: AnnotationRow = record
            .deserialize(None)
            .map_err(|e| EdfError::AnnotationParse {
                line,
                message: e.to_string(),
            })?;
        if !(row.onset_s.is_finite() && row.offset_s.is_finite()) || row.onset_s < 0.0 {
            return Err(EdfError::AnnotationParse {
                line,
                message: format!("invalid times {} .. {}", row.onset_s, row.offset_s),
            });
        }
        if row.offset_s <= row.onset_s {
            return Err(EdfError::OrderError {
                onset_s: row.onset_s,
                offset_s: row.offset_s,
            });
        }
        intervals.push(LabeledInterval::new(row.onset_s, row.offset_s, row.label));
    }
    intervals.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    check_disjoint(&intervals)?;
    Ok(intervals)
}

fn check_disjoint(sorted: &[LabeledInterval]) -> Result<(), EdfError> {
    for pair in sorted.windows(2) {
        if pair[1].onset_s < pair[0].offset_s {
            return Err(EdfError::OverlapError {
                first_onset_s: pair[0].onset_s,
                first_offset_s: pair[0].offset_s,
                second_onset_s: pair[1].onset_s,
                second_offset_s: pair[1].offset_s,
            });
        }
    }
    Ok(())
}

/// Check that sorted, disjoint intervals fall inside `[0, duration_s]`.
pub fn validate_intervals(intervals: &[LabeledInterval], duration_s: f64) -> Result<(), EdfError> {
    for iv in intervals {
        if iv.onset_s.partial_cmp(&iv.offset_s) != Some(std::cmp::Ordering::Less) {
            return Err(EdfError::OrderError {
                onset_s: iv.onset_s,
                offset_s: iv.offset_s,
            });
        }
        if iv.onset_s < 0.0 || iv.offset_s > duration_s {
            return Err(EdfError::OutOfRecording {
                onset_s: iv.onset_s,
                offset_s: iv.offset_s,
                duration_s,
            });
        }
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    check_disjoint(&sorted)
}

pub fn write_annotations<W: Write>(intervals: &[LabeledInterval], out: W) -> Result<(), EdfError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["onset_s", "offset_s", "label"])
        .map_err(csv_io)?;
    for iv in intervals {
        w.serialize((iv.onset_s, iv.offset_s, iv.label.as_str()))
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> EdfError {
    EdfError::Io(std::io::Error::other(e))
}
