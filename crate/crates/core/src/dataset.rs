//! WAV ingestion, the record manifest and the measurement contract.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Label;
use crate::signal::TimeSignal;

/// Nominal sample rate of an end-of-line record.
pub const EXPECTED_RATE_HZ: f64 = 50_000.0;
/// Nominal record length, 2^18 samples.
pub const EXPECTED_LEN: usize = 1 << 18;
/// Lowest rate accepted in lenient mode.
pub const LENIENT_MIN_RATE_HZ: f64 = 16_000.0;
/// Shortest record accepted in lenient mode.
pub const LENIENT_MIN_DURATION_S: f64 = 2.0;

pub fn read_wav(path: &Path) -> Result<TimeSignal> {
    let wav_err = |message: String| Error::Wav {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(wav_err(format!("expected mono, found {} channels", spec.channels)));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>(),
        (fmt, bits) => return Err(wav_err(format!("unsupported encoding {fmt:?}/{bits} bit"))),
    }
    .map_err(|e| wav_err(e.to_string()))?;
    TimeSignal::new(samples, f64::from(spec.sample_rate)).map_err(|e| wav_err(e.to_string()))
}

/// Writes mono 32-bit float PCM.
pub fn write_wav(path: &Path, signal: &TimeSignal) -> Result<()> {
    let wav_err = |e: hound::Error| Error::Wav {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let rate = signal.sample_rate_hz();
    if rate.fract() != 0.0 || rate > f64::from(u32::MAX) {
        return Err(Error::InvalidParameter(format!(
            "WAV needs an integer sample rate, got {rate}"
        )));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in signal.samples() {
        w.write_sample(s as f32).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}

/// Checks a record against the nominal rate and length. Lenient mode
/// accepts other geometries above a floor; downstream windows are all
/// specified in seconds, so they adapt without resampling.
pub fn validate_measurement(
    signal: TimeSignal,
    expected_rate_hz: f64,
    expected_len: usize,
    strict: bool,
) -> Result<TimeSignal> {
    let rate = signal.sample_rate_hz();
    if strict {
        if rate != expected_rate_hz || signal.len() != expected_len {
            return Err(Error::Measurement(format!(
                "expected {expected_len} samples at {expected_rate_hz} Hz, got {} at {rate} Hz",
                signal.len()
            )));
        }
        return Ok(signal);
    }
    if rate < LENIENT_MIN_RATE_HZ {
        return Err(Error::Measurement(format!(
            "sample rate {rate} Hz is below {LENIENT_MIN_RATE_HZ} Hz"
        )));
    }
    if signal.duration_s() < LENIENT_MIN_DURATION_S {
        return Err(Error::Measurement(format!(
            "record of {:.3} s is shorter than {LENIENT_MIN_DURATION_S} s",
            signal.duration_s()
        )));
    }
    Ok(signal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Disturbance,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Disturbance => "disturbance",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kinds of background disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    Hammer,
    AirPressure,
    Music,
    Speech,
    Ventilation,
    Wrench,
}

impl DisturbanceKind {
    pub const ALL: [DisturbanceKind; 6] = [
        DisturbanceKind::Hammer,
        DisturbanceKind::AirPressure,
        DisturbanceKind::Music,
        DisturbanceKind::Speech,
        DisturbanceKind::Ventilation,
        DisturbanceKind::Wrench,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DisturbanceKind::Hammer => "hammer",
            DisturbanceKind::AirPressure => "air_pressure",
            DisturbanceKind::Music => "music",
            DisturbanceKind::Speech => "speech",
            DisturbanceKind::Ventilation => "ventilation",
            DisturbanceKind::Wrench => "wrench",
        }
    }
}

/// Background condition of a record: a generic level or a named disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTag {
    None,
    Low,
    Loud,
    #[serde(untagged)]
    Disturbance(DisturbanceKind),
}

impl NoiseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseTag::None => "none",
            NoiseTag::Low => "low",
            NoiseTag::Loud => "loud",
            NoiseTag::Disturbance(k) => k.as_str(),
        }
    }
}

impl fmt::Display for NoiseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub label: Label,
    pub noise: NoiseTag,
    pub split: Split,
    /// Generator parameters, when the record is synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipes: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<Record>,
    /// Directory relative record paths are resolved against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(records: Vec<Record>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self {
            records,
            base_dir: base_dir.into(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(&r.path) {
                return Err(Error::Manifest(format!(
                    "duplicate record path {}",
                    r.path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let records: Vec<Record> = serde_json::from_str(&text)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(records, base)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.records)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, record: &Record) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.base_dir.join(&record.path)
        }
    }

    pub fn split(&self, split: Split) -> Vec<&Record> {
        self.records.iter().filter(|r| r.split == split).collect()
    }
}
