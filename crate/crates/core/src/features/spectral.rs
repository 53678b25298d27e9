//! Time-frequency features: log-mel spectrogram (LMS) and log-envelope
//! spectrogram (LES_spectral).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::kinematics::{fault_frequency_set, FreqDomain, GearTrain};
use crate::signal::{dct2, stft_magnitudes, BandSpec, Framing, TimeSignal, LOG_EPS};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangle corner frequencies: `n_filters + 2` points equally spaced in mel.
pub fn mel_points_hz(n_filters: usize, f_lo: f64, f_hi: f64) -> Vec<f64> {
    let (m_lo, m_hi) = (hz_to_mel(f_lo), hz_to_mel(f_hi));
    let step = (m_hi - m_lo) / (n_filters + 1) as f64;
    (0..n_filters + 2)
        .map(|i| mel_to_hz(m_lo + step * i as f64))
        .collect()
}

/// `n_filters` triangular filters (peak weight 1) over the one-sided bins of
/// an `fft_len`-point transform. Row `k` rises from corner `k` to a peak at
/// corner `k + 1` and falls to zero at corner `k + 2`.
pub fn mel_filterbank(
    n_filters: usize,
    f_lo: f64,
    f_hi: f64,
    fft_len: usize,
    sample_rate_hz: f64,
) -> Result<Vec<Vec<f64>>> {
    if n_filters == 0 || !(f_lo > 0.0 && f_lo < f_hi && f_hi < sample_rate_hz / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "mel bank needs 0 < f_lo < f_hi < fs/2, got {f_lo}..{f_hi} at {sample_rate_hz} Hz"
        )));
    }
    let pts = mel_points_hz(n_filters, f_lo, f_hi);
    let bin_hz = sample_rate_hz / fft_len as f64;
    let min_gap = pts.windows(2).map(|w| w[1] - w[0]).fold(f64::MAX, f64::min);
    if bin_hz > min_gap {
        return Err(Error::InvalidParameter(format!(
            "{fft_len}-point transform ({bin_hz:.2} Hz bins) cannot resolve mel centers {min_gap:.2} Hz apart"
        )));
    }
    let n_bins = fft_len / 2 + 1;
    Ok((0..n_filters)
        .map(|k| {
            let (l, c, u) = (pts[k], pts[k + 1], pts[k + 2]);
            (0..n_bins)
                .map(|b| {
                    let f = b as f64 * bin_hz;
                    if f >= l && f <= c {
                        (f - l) / (c - l)
                    } else if f > c && f <= u {
                        (u - f) / (u - c)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub n_filters: usize,
    pub band: BandSpec,
    /// Window length in cycles of the slowest shaft at minimum permitted speed.
    pub slow_shaft_cycles: f64,
    pub overlap_frac: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            n_filters: 24,
            band: BandSpec::default(),
            slow_shaft_cycles: 4.0,
            overlap_frac: 0.5,
        }
    }
}

impl MelConfig {
    /// Time-slot length: enough full cycles of the output shaft even when the
    /// motor runs at the lower speed tolerance.
    pub fn window_s(&self, train: &GearTrain) -> f64 {
        let slowest = train.shaft_speeds()[2] * (1.0 - train.speed_tolerance_frac);
        self.slow_shaft_cycles / slowest
    }
}

/// Log-mel features with the default configuration.
pub fn log_mel_features(signal: &TimeSignal, train: &GearTrain) -> Result<FeatureVector> {
    log_mel_features_with(signal, train, &MelConfig::default())
}

/// Hamming-windowed magnitude spectra of long time slots, projected onto the
/// mel bank, log-compressed and flattened slot-major (`lms_t<k>_b<j>`).
pub fn log_mel_features_with(
    signal: &TimeSignal,
    train: &GearTrain,
    cfg: &MelConfig,
) -> Result<FeatureVector> {
    let fs = signal.sample_rate_hz();
    let framing = Framing::new(signal.len(), fs, cfg.window_s(train), cfg.overlap_frac)?;
    let bank = mel_filterbank(cfg.n_filters, cfg.band.low_hz, cfg.band.high_hz, framing.window, fs)?;
    let spectra = stft_magnitudes(signal.samples(), framing);
    let mut names = Vec::with_capacity(framing.frames * cfg.n_filters);
    let mut values = Vec::with_capacity(framing.frames * cfg.n_filters);
    for (t, spec) in spectra.iter().enumerate() {
        for (b, weights) in bank.iter().enumerate() {
            let e: f64 = weights.iter().zip(spec).map(|(w, a)| w * a).sum();
            names.push(format!("lms_t{t}_b{b}"));
            values.push((e + LOG_EPS).ln());
        }
    }
    FeatureVector::new(names, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpectrogramConfig {
    pub window_s: f64,
    pub overlap_frac: f64,
    /// Envelope bins below this frequency are discarded.
    pub min_envelope_hz: f64,
    pub pool: usize,
}

impl Default for EnvelopeSpectrogramConfig {
    fn default() -> Self {
        Self {
            window_s: 0.0088,
            overlap_frac: 0.5,
            min_envelope_hz: 10.0,
            pool: 11,
        }
    }
}

/// Minimum number of frames: two full pooling windows.
fn min_frames(cfg: &EnvelopeSpectrogramConfig) -> usize {
    2 * cfg.pool
}

/// Geometry of the envelope spectrogram for a record of `len` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeGeometry {
    pub framing: Framing,
    /// Frame rate in Hz; the envelope Nyquist is half of it.
    pub frame_rate_hz: f64,
    /// Resolution of the DCT along time.
    pub envelope_bin_hz: f64,
}

impl EnvelopeGeometry {
    pub fn new(len: usize, sample_rate_hz: f64, cfg: &EnvelopeSpectrogramConfig) -> Result<Self> {
        let framing = Framing::new(len, sample_rate_hz, cfg.window_s, cfg.overlap_frac)?;
        if framing.frames < min_frames(cfg) {
            return Err(Error::SignalTooShort {
                required: (min_frames(cfg) - 1) * framing.hop + framing.window,
                actual: len,
            });
        }
        let frame_rate_hz = sample_rate_hz / framing.hop as f64;
        Ok(Self {
            framing,
            frame_rate_hz,
            envelope_bin_hz: frame_rate_hz / (2.0 * framing.frames as f64),
        })
    }

    pub fn envelope_nyquist_hz(&self) -> f64 {
        self.frame_rate_hz / 2.0
    }

    pub fn pooled_width_hz(&self, pool: usize) -> f64 {
        self.envelope_bin_hz * pool as f64
    }
}

/// Checks the window against the kinematics: shorter than a quarter motor
/// cycle, fast enough to observe the second mesh frequency plus tolerance,
/// and pooling coarse enough never to merge two fault frequencies.
pub fn validate_envelope_config(
    train: &GearTrain,
    cfg: &EnvelopeSpectrogramConfig,
    len: usize,
    sample_rate_hz: f64,
) -> Result<EnvelopeGeometry> {
    let g = EnvelopeGeometry::new(len, sample_rate_hz, cfg)?;
    let [f1, _, _] = train.shaft_speeds();
    let window_s = g.framing.window as f64 / sample_rate_hz;
    if window_s >= 0.25 / f1 {
        return Err(Error::InvalidParameter(format!(
            "envelope window {window_s:.4} s is not below a quarter motor cycle"
        )));
    }
    let needed = train.mesh_frequency(2) * (1.0 + train.speed_tolerance_frac);
    if g.envelope_nyquist_hz() < needed {
        return Err(Error::InvalidParameter(format!(
            "envelope Nyquist {:.2} Hz below second mesh frequency {needed:.2} Hz",
            g.envelope_nyquist_hz()
        )));
    }
    let ffs = fault_frequency_set(
        train,
        FreqDomain::new(cfg.min_envelope_hz, g.envelope_nyquist_hz()),
    );
    let width = g.pooled_width_hz(cfg.pool);
    if let Some(w) = ffs.windows(2).find(|w| w[1].hz - w[0].hz <= width) {
        return Err(Error::InvalidParameter(format!(
            "pooling width {width:.3} Hz merges {} and {}",
            w[0], w[1]
        )));
    }
    Ok(g)
}

/// Non-overlapping max pooling; the final short window is kept.
pub fn max_pool(x: &[f64], factor: usize) -> Vec<f64> {
    x.chunks(factor)
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Log-envelope spectrogram features with the default configuration.
pub fn log_envelope_spectrogram_features(
    signal: &TimeSignal,
    train: &GearTrain,
    band: BandSpec,
) -> Result<FeatureVector> {
    log_envelope_spectrogram_features_with(
        signal,
        train,
        band,
        &EnvelopeSpectrogramConfig::default(),
    )
}

/// Short-window log spectrogram restricted to the pass band; each frequency
/// row is transformed along time with a DCT-II, rectified, cut below
/// `min_envelope_hz`, max-pooled and flattened row-major.
pub fn log_envelope_spectrogram_features_with(
    signal: &TimeSignal,
    train: &GearTrain,
    band: BandSpec,
    cfg: &EnvelopeSpectrogramConfig,
) -> Result<FeatureVector> {
    let fs = signal.sample_rate_hz();
    band.validate(fs)?;
    let geom = validate_envelope_config(train, cfg, signal.len(), fs)?;
    let framing = geom.framing;
    let spectra = stft_magnitudes(signal.samples(), framing);
    let bin_hz = fs / framing.window as f64;
    let rows: Vec<usize> = (0..framing.window / 2 + 1)
        .filter(|&k| {
            let f = k as f64 * bin_hz;
            f >= band.low_hz && f <= band.high_hz
        })
        .collect();
    let first_env = (0..framing.frames)
        .find(|&k| k as f64 * geom.envelope_bin_hz >= cfg.min_envelope_hz)
        .unwrap_or(framing.frames);

    let mut names = Vec::new();
    let mut values = Vec::new();
    for &k in &rows {
        let course: Vec<f64> = spectra.iter().map(|s| (s[k] + LOG_EPS).ln()).collect();
        let env: Vec<f64> = dct2(&course).into_iter().map(f64::abs).collect();
        let pooled = max_pool(&env[first_env..], cfg.pool);
        let freq = k as f64 * bin_hz;
        for (j, v) in pooled.into_iter().enumerate() {
            names.push(format!("lesspec_f{freq:.1}_e{j}"));
            values.push(v);
        }
    }
    FeatureVector::new(names, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mel_formula() {
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01);
        assert!((mel_to_hz(hz_to_mel(3210.0)) - 3210.0).abs() < 1e-9);
    }

    #[test]
    fn filterbank_shape() {
        let bank = mel_filterbank(24, 1150.0, 5100.0, 87_500, 50_000.0).unwrap();
        assert_eq!(bank.len(), 24);
        let pts = mel_points_hz(24, 1150.0, 5100.0);
        let centers = &pts[1..25];
        assert!(centers.windows(2).all(|w| w[0] < w[1]));
        assert!(centers.iter().all(|&c| c > 1150.0 && c < 5100.0));
        for k in 0..22 {
            let peak = bank[k]
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                .0;
            assert_eq!(bank[k + 2][peak], 0.0);
            assert!(bank[k + 1][peak] < 1.0);
        }
        assert!(mel_filterbank(24, 1150.0, 5100.0, 64, 50_000.0).is_err());
        assert!(mel_filterbank(24, 5100.0, 1150.0, 4096, 50_000.0).is_err());
    }

    #[test]
    fn window_matches_four_slow_cycles() {
        let w = MelConfig::default().window_s(&GearTrain::reference());
        assert!((w - 1.7585).abs() < 1e-3, "{w}");
    }

    #[test]
    fn lms_dimensions_and_silence() {
        let fs = 50_000.0;
        let s = TimeSignal::new(vec![0.0; 262_144], fs).unwrap();
        let v = log_mel_features(&s, &GearTrain::reference()).unwrap();
        assert_eq!(v.len(), 96);
        let floor = LOG_EPS.ln();
        assert!(v.values().iter().all(|&x| (x - floor).abs() < 1e-12));
    }

    #[test]
    fn max_pool_keeps_remainder() {
        assert_eq!(max_pool(&[1.0, 3.0, 2.0, 5.0, 4.0], 2), vec![3.0, 5.0, 4.0]);
    }

    #[test]
    fn envelope_geometry_on_full_record() {
        let cfg = EnvelopeSpectrogramConfig::default();
        let g = validate_envelope_config(&GearTrain::reference(), &cfg, 262_144, 50_000.0).unwrap();
        assert_eq!(g.framing.window, 440);
        assert_eq!(g.framing.frames, 1190);
        assert!((g.envelope_nyquist_hz() - 113.636).abs() < 1e-3);
        let dropped = (0..1190)
            .filter(|&k| (k as f64) * g.envelope_bin_hz < 10.0)
            .count();
        assert_eq!(dropped, 105);
        assert_eq!((1190 - dropped).div_ceil(11), 99);
    }

    #[test]
    fn envelope_spectrogram_feature_count() {
        let fs = 50_000.0;
        let s = TimeSignal::from_fn(262_144, fs, |t| (2.0 * PI * 3000.0 * t).sin()).unwrap();
        let v = log_envelope_spectrogram_features(&s, &GearTrain::reference(), BandSpec::default())
            .unwrap();
        // rows 1250..=5000 Hz in 113.6 Hz steps
        assert_eq!(v.len(), 34 * 99);
    }

    #[test]
    fn envelope_window_constraints() {
        let cfg = EnvelopeSpectrogramConfig {
            window_s: 0.02,
            ..Default::default()
        };
        assert!(validate_envelope_config(&GearTrain::reference(), &cfg, 262_144, 50_000.0).is_err());
        let short = EnvelopeSpectrogramConfig::default();
        assert!(validate_envelope_config(&GearTrain::reference(), &short, 4000, 50_000.0).is_err());
    }
}
