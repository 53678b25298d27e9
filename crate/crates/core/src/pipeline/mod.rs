//! End-to-end study: configuration, feature extraction, training on the
//! training split, threshold calibration on the validation split, evaluation
//! and single-record prediction.

mod bundle;
mod study;

pub use bundle::{Bundle, TrainedModel, ValidationSummary};
pub use study::{
    calibrate, evaluate, predict, train, BreakdownRow, Prediction, PredictionMode, Report,
    ReportRow, RowKind,
};

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{read_wav, validate_measurement, Manifest, EXPECTED_LEN, EXPECTED_RATE_HZ};
use crate::error::{Error, Result};
use crate::features::envelope::{les_ff, les_limited, log_envelope_spectrum_prefiltered};
use crate::features::psycho::{pa_features, palff, ModulationModelConfig};
use crate::features::spectral::{
    log_envelope_spectrogram_features_with, log_mel_features_with, EnvelopeSpectrogramConfig,
    MelConfig,
};
use crate::features::{FeatureMatrix, FeatureVector};
use crate::kinematics::{fault_frequency_set, FaultFrequency, FreqDomain, GearTrain};
use crate::occ::{OccConfig, OccKind};
use crate::signal::{bandpass, BandSpec, TimeSignal};
use crate::synth::DatasetSpec;

/// Lowest envelope frequency considered by the envelope features.
pub const MIN_ENVELOPE_HZ: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    LesLimited,
    LesFf,
    LmsPca,
    LesSpectral,
    Pa,
    Palff,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 6] = [
        FeatureSet::LesLimited,
        FeatureSet::LesFf,
        FeatureSet::LmsPca,
        FeatureSet::LesSpectral,
        FeatureSet::Pa,
        FeatureSet::Palff,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSet::LesLimited => "les_limited",
            FeatureSet::LesFf => "les_ff",
            FeatureSet::LmsPca => "lms_pca",
            FeatureSet::LesSpectral => "les_spectral",
            FeatureSet::Pa => "pa",
            FeatureSet::Palff => "palff",
        }
    }

    /// Preprocessing each feature family is paired with by default.
    pub fn default_preprocessor(&self) -> PreprocessorKind {
        match self {
            FeatureSet::LesFf | FeatureSet::Pa | FeatureSet::Palff => PreprocessorKind::Scaler,
            FeatureSet::LmsPca => PreprocessorKind::Pca,
            FeatureSet::LesLimited | FeatureSet::LesSpectral => PreprocessorKind::None,
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown feature set `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessorKind {
    None,
    Scaler,
    Pca,
}

/// Everything a study needs. All window lengths are in seconds, so a record
/// at another sample rate only changes the derived sample counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gear_train: GearTrain,
    pub band: BandSpec,
    pub feature_set: FeatureSet,
    /// Overrides the default preprocessing of the feature set; requires
    /// `allow_unpaired_preprocessor` when it differs from the default.
    pub preprocessor: Option<PreprocessorKind>,
    pub allow_unpaired_preprocessor: bool,
    /// Share of training variance retained by PCA.
    pub pca_variance: f64,
    pub model: OccKind,
    /// `seed` and, for the OC-SVM, `contamination_nu` are set per run.
    pub occ: OccConfig,
    /// Number of runs with seeds `seed, seed + 1, ...` (I-Forest, BRM).
    pub runs: usize,
    /// One OC-SVM run per contamination value.
    pub nu_sweep: Vec<f64>,
    pub seed: u64,
    pub strict_io: bool,
    pub mel: MelConfig,
    pub envelope_spectrogram: EnvelopeSpectrogramConfig,
    pub psycho: ModulationModelConfig,
    pub dataset: DatasetSpec,
    pub prediction: PredictionMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gear_train: GearTrain::reference(),
            band: BandSpec::default(),
            feature_set: FeatureSet::Palff,
            preprocessor: None,
            allow_unpaired_preprocessor: false,
            pca_variance: 0.9,
            model: OccKind::Iforest,
            occ: OccConfig::default(),
            runs: 5,
            nu_sweep: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            seed: 0,
            strict_io: true,
            mel: MelConfig::default(),
            envelope_spectrogram: EnvelopeSpectrogramConfig::default(),
            psycho: ModulationModelConfig::default(),
            dataset: DatasetSpec::default(),
            prediction: PredictionMode::Selected,
        }
    }
}

/// The part of the configuration that determines a trained bundle.
#[derive(Serialize)]
struct ModelIdentity<'a> {
    gear_train: &'a GearTrain,
    band: &'a BandSpec,
    feature_set: FeatureSet,
    preprocessor: PreprocessorKind,
    pca_variance: f64,
    model: OccKind,
    occ: &'a OccConfig,
    runs: Vec<(u64, f64)>,
    mel: &'a MelConfig,
    envelope_spectrogram: &'a EnvelopeSpectrogramConfig,
    psycho: &'a ModulationModelConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.gear_train.validate()?;
        self.psycho.validate()?;
        self.occ.validate()?;
        let kind = self.preprocessor_kind();
        if kind != self.feature_set.default_preprocessor() && !self.allow_unpaired_preprocessor {
            return Err(Error::InvalidParameter(format!(
                "feature set {} is paired with {:?}; set allow_unpaired_preprocessor to use {kind:?}",
                self.feature_set,
                self.feature_set.default_preprocessor()
            )));
        }
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return Err(Error::InvalidParameter("pca_variance must lie in (0, 1]".into()));
        }
        if self.run_plan().is_empty() {
            return Err(Error::InvalidParameter("at least one run is required".into()));
        }
        if self.nu_sweep.iter().any(|&nu| !(nu > 0.0 && nu < 1.0)) {
            return Err(Error::InvalidParameter("nu values must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn preprocessor_kind(&self) -> PreprocessorKind {
        self.preprocessor
            .unwrap_or_else(|| self.feature_set.default_preprocessor())
    }

    /// `(seed, nu)` of every run.
    pub fn run_plan(&self) -> Vec<(u64, f64)> {
        match self.model {
            OccKind::Ocsvm => self
                .nu_sweep
                .iter()
                .enumerate()
                .map(|(i, &nu)| (self.seed.wrapping_add(i as u64), nu))
                .collect(),
            _ => (0..self.runs)
                .map(|i| (self.seed.wrapping_add(i as u64), self.occ.contamination_nu))
                .collect(),
        }
    }

    /// SHA-256 of the canonical JSON of every setting that shapes the
    /// features or the fitted models.
    pub fn model_hash(&self) -> [u8; 32] {
        let id = ModelIdentity {
            gear_train: &self.gear_train,
            band: &self.band,
            feature_set: self.feature_set,
            preprocessor: self.preprocessor_kind(),
            pca_variance: self.pca_variance,
            model: self.model,
            occ: &self.occ,
            runs: self.run_plan(),
            mel: &self.mel,
            envelope_spectrogram: &self.envelope_spectrogram,
            psycho: &self.psycho,
        };
        let json = serde_json::to_vec(&id).expect("config serializes");
        Sha256::digest(&json).into()
    }

    /// Fault frequencies inside the envelope domain.
    pub fn fault_frequencies(&self) -> Vec<FaultFrequency> {
        fault_frequency_set(&self.gear_train, self.les_domain())
    }

    /// `[10 Hz, highest fault frequency widened by the speed tolerance]`.
    pub fn les_domain(&self) -> FreqDomain {
        let all = fault_frequency_set(
            &self.gear_train,
            FreqDomain::new(MIN_ENVELOPE_HZ, f64::INFINITY),
        );
        let top = all.last().map_or(MIN_ENVELOPE_HZ, |f| f.hz);
        FreqDomain::new(
            MIN_ENVELOPE_HZ,
            top * (1.0 + self.gear_train.speed_tolerance_frac),
        )
    }
}

/// Band-pass filters a record and computes the configured feature family.
pub fn extract_features(signal: &TimeSignal, cfg: &RunConfig) -> Result<FeatureVector> {
    let filtered = bandpass(signal, cfg.band)?;
    let tol = cfg.gear_train.speed_tolerance_frac;
    let ff = || -> Result<FeatureVector> {
        let les = log_envelope_spectrum_prefiltered(&filtered);
        les_ff(&les, &cfg.fault_frequencies(), tol)
    };
    match cfg.feature_set {
        FeatureSet::LesLimited => {
            les_limited(&log_envelope_spectrum_prefiltered(&filtered), cfg.les_domain())
        }
        FeatureSet::LesFf => ff(),
        FeatureSet::LmsPca => {
            let mel = MelConfig {
                band: cfg.band,
                ..cfg.mel.clone()
            };
            log_mel_features_with(&filtered, &cfg.gear_train, &mel)
        }
        FeatureSet::LesSpectral => log_envelope_spectrogram_features_with(
            &filtered,
            &cfg.gear_train,
            cfg.band,
            &cfg.envelope_spectrogram,
        ),
        FeatureSet::Pa => pa_features(&filtered, &cfg.psycho),
        FeatureSet::Palff => palff(&pa_features(&filtered, &cfg.psycho)?, &ff()?),
    }
}

/// Reads a record and applies the measurement contract.
pub fn load_measurement(path: &Path, strict: bool) -> Result<TimeSignal> {
    validate_measurement(read_wav(path)?, EXPECTED_RATE_HZ, EXPECTED_LEN, strict)
}

/// Row key of a record in the feature store.
pub fn record_key(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Extracts features for every manifest record, one row per record.
pub fn extract_store(manifest: &Manifest, cfg: &RunConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let vectors = manifest
        .records
        .par_iter()
        .map(|r| extract_features(&load_measurement(&manifest.resolve(r), cfg.strict_io)?, cfg))
        .collect::<Result<Vec<_>>>()?;
    let keys = manifest.records.iter().map(|r| record_key(&r.path)).collect();
    FeatureMatrix::from_vectors(keys, &vectors)
}

/// Feature store as CSV: header `path,<feature names>`, one row per record,
/// values in shortest round-trip notation.
pub fn write_feature_csv(path: &Path, store: &FeatureMatrix) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let csv_err = |e: csv::Error| Error::InvalidParameter(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let header = std::iter::once("path").chain(store.col_names().iter().map(String::as_str));
    w.write_record(header).map_err(csv_err)?;
    for (name, row) in store.row_names().iter().zip(store.rows()) {
        let fields = std::iter::once(name.clone()).chain(row.iter().map(f64::to_string));
        w.write_record(fields).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_feature_csv(path: &Path) -> Result<FeatureMatrix> {
    let bad = |msg: String| Error::InvalidParameter(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.get(0) != Some("path") {
        return Err(bad("first column must be `path`".into()));
    }
    let cols: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(record[0].to_string());
        let row = record
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("line {line}: bad number `{f}`"))))
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
    }
    FeatureMatrix::new(rows, cols, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_domain_matches_reference() {
        let cfg = RunConfig::default();
        let d = cfg.les_domain();
        assert_eq!(d.lo, 10.0);
        assert!((d.hi - 555.5).abs() < 1e-9);
        assert_eq!(cfg.fault_frequencies().len(), 32);
    }

    #[test]
    fn run_plans() {
        let mut cfg = RunConfig {
            seed: 40,
            ..Default::default()
        };
        assert_eq!(cfg.run_plan().iter().map(|r| r.0).collect::<Vec<_>>(), vec![40, 41, 42, 43, 44]);
        cfg.model = OccKind::Ocsvm;
        assert_eq!(cfg.run_plan().iter().map(|r| r.1).collect::<Vec<_>>(), cfg.nu_sweep);
    }

    #[test]
    fn pairing_is_enforced() {
        let mut cfg = RunConfig {
            preprocessor: Some(PreprocessorKind::Pca),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.allow_unpaired_preprocessor = true;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn hash_tracks_model_settings_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.strict_io = false;
        b.dataset.train_good = 3;
        assert_eq!(a.model_hash(), b.model_hash());
        b.seed = 1;
        assert_ne!(a.model_hash(), b.model_hash());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"feature_set": "les_ff", "seed": 3}"#).unwrap();
        assert_eq!(cfg.feature_set, FeatureSet::LesFf);
        assert_eq!(cfg.runs, 5);
        assert!(serde_json::from_str::<RunConfig>(r#"{"featureset": "x"}"#).is_err());
    }

    #[test]
    fn feature_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let m = FeatureMatrix::new(
            vec!["train/a.wav".into(), "train/b,2.wav".into()],
            vec!["x".into(), "y".into()],
            vec![vec![0.1, -1e-300], vec![1.0 / 3.0, 12345.678]],
        )
        .unwrap();
        write_feature_csv(&p, &m).unwrap();
        assert_eq!(read_feature_csv(&p).unwrap(), m);
        fs::write(&p, "path,x,y\na.wav,1,2\nb.wav,3\n").unwrap();
        assert!(read_feature_csv(&p).is_err());
        fs::write(&p, "path,x\na.wav,one\n").unwrap();
        assert!(read_feature_csv(&p).is_err());
    }
}
