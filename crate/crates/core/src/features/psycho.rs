//! Simplified roughness and fluctuation-strength model.
//!
//! The record is split into critical bands between 1150 and 5100 Hz. For each
//! band the Hilbert envelope is framed; the mean-removed, Hann-windowed frame
//! is transformed and its modulation spectrum weighted by a unimodal
//! sensitivity curve (peak at 70 Hz for roughness, 4 Hz for fluctuation
//! strength). The weighted modulation RMS divided by the envelope mean is a
//! generalized modulation depth; a frame's metric is the calibrated sum of
//! squared depths over the excited bands, each band weighted by its share of
//! the frame's envelope power.
//!
//! Analysis filters overlap their neighbours by one critical band so that a
//! carrier close to a band edge keeps both sidebands in at least one band.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::signal::{
    analytic, design_bandpass_fir_with_len, fft_plan, filter_bank_zero_phase, fir_tap_count, hann,
    BandSpec, TimeSignal,
};

/// Critical-band rate in Bark.
pub fn bark(hz: f64) -> f64 {
    13.0 * (0.00076 * hz).atan() + 3.5 * (hz / 7500.0).powi(2).atan()
}

/// Inverse of [`bark`] by bisection (monotone on the audio range).
pub fn bark_to_hz(z: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 30_000.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bark(mid) < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `n_bands + 1` edges equally spaced in Bark between `band.low_hz` and
/// `band.high_hz`.
pub fn critical_band_edges(band: BandSpec, n_bands: usize) -> Vec<f64> {
    let (z0, z1) = (bark(band.low_hz), bark(band.high_hz));
    let mut edges: Vec<f64> = (0..=n_bands)
        .map(|i| bark_to_hz(z0 + (z1 - z0) * i as f64 / n_bands as f64))
        .collect();
    edges[0] = band.low_hz;
    edges[n_bands] = band.high_hz;
    edges
}

/// Raised-cosine sensitivity on a log-frequency axis with unit gain at
/// `peak_hz` and half power at both `half_power_*` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationWeighting {
    pub peak_hz: f64,
    pub half_power_lo: f64,
    pub half_power_hi: f64,
}

/// Support of the raised cosine in units of the half-power distance;
/// chosen so that `0.5 * (1 + cos(pi / SPAN)) = 1/sqrt(2)`.
fn raised_cosine_span() -> f64 {
    std::f64::consts::PI / (std::f64::consts::SQRT_2 - 1.0).acos()
}

impl ModulationWeighting {
    pub fn validate(&self) -> Result<()> {
        if self.half_power_lo > 0.0
            && self.half_power_lo < self.peak_hz
            && self.peak_hz < self.half_power_hi
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "weighting needs 0 < lo < peak < hi, got {self:?}"
            )))
        }
    }

    /// Amplitude weight at modulation frequency `hz` (0 at DC).
    pub fn weight(&self, hz: f64) -> f64 {
        if hz <= 0.0 {
            return 0.0;
        }
        let half = if hz < self.peak_hz {
            self.half_power_lo
        } else {
            self.half_power_hi
        };
        let r = (hz / self.peak_hz).ln() / (half / self.peak_hz).ln();
        let span = raised_cosine_span();
        if r >= span {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * r / span).cos())
        }
    }
}

/// Framing, weighting and calibration of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub weighting: ModulationWeighting,
    pub frame_s: f64,
    pub hop_s: f64,
    /// Frames must hold two periods of this modulation frequency.
    pub min_modulation_hz: f64,
    pub gain: f64,
}

impl MetricConfig {
    fn validate(&self) -> Result<()> {
        self.weighting.validate()?;
        if !(self.hop_s > 0.0 && self.frame_s > 0.0 && self.gain > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "frame, hop and gain must be positive: {self:?}"
            )));
        }
        if self.frame_s + 1e-12 < 2.0 / self.min_modulation_hz {
            return Err(Error::InvalidParameter(format!(
                "frame of {} s is shorter than two periods of {} Hz",
                self.frame_s, self.min_modulation_hz
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationModelConfig {
    pub band_edges_hz: Vec<f64>,
    pub roughness: MetricConfig,
    pub fluctuation: MetricConfig,
    /// Bands whose envelope mean lies this far below the strongest band of
    /// the frame count as unexcited.
    pub excitation_range_db: f64,
    /// Each analysis filter extends this many critical bands beyond its own
    /// edges on both sides.
    pub band_overlap: usize,
}

/// Gains that map the 100 % AM references to 1.0 (see [`calibration_gains`]).
const ROUGHNESS_GAIN: f64 = 2.113_100_575_370_902_2;
const FLUCTUATION_GAIN: f64 = 2.002_244_104_547_994_4;

/// Carrier of the calibration references.
pub const REFERENCE_CARRIER_HZ: f64 = 2000.0;
pub const REFERENCE_DURATION_S: f64 = 4.0;
pub const REFERENCE_RATE_HZ: f64 = 50_000.0;

impl Default for ModulationModelConfig {
    fn default() -> Self {
        let mut cfg = Self::uncalibrated();
        cfg.roughness.gain = ROUGHNESS_GAIN;
        cfg.fluctuation.gain = FLUCTUATION_GAIN;
        cfg
    }
}

impl ModulationModelConfig {
    /// Default geometry with unit gains.
    pub fn uncalibrated() -> Self {
        Self {
            band_edges_hz: critical_band_edges(BandSpec::default(), 8),
            roughness: MetricConfig {
                weighting: ModulationWeighting {
                    peak_hz: 70.0,
                    half_power_lo: 30.0,
                    half_power_hi: 150.0,
                },
                frame_s: 0.2,
                hop_s: 0.1,
                min_modulation_hz: 10.0,
                gain: 1.0,
            },
            fluctuation: MetricConfig {
                weighting: ModulationWeighting {
                    peak_hz: 4.0,
                    half_power_lo: 0.5,
                    half_power_hi: 20.0,
                },
                frame_s: 2.0,
                hop_s: 1.0,
                min_modulation_hz: 1.0,
                gain: 1.0,
            },
            excitation_range_db: 40.0,
            band_overlap: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.band_edges_hz.len() < 2 || self.band_edges_hz.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "band edges must be strictly increasing".into(),
            ));
        }
        if self.band_edges_hz[0] <= 0.0 {
            return Err(Error::InvalidParameter("band edges must be positive".into()));
        }
        self.roughness.validate()?;
        self.fluctuation.validate()
    }
}

/// 100 % amplitude-modulated reference tone.
pub fn reference_am_tone(mod_hz: f64, depth: f64) -> TimeSignal {
    let n = (REFERENCE_DURATION_S * REFERENCE_RATE_HZ) as usize;
    let w = 2.0 * std::f64::consts::PI;
    TimeSignal::from_fn(n, REFERENCE_RATE_HZ, |t| {
        (1.0 + depth * (w * mod_hz * t).cos()) * (w * REFERENCE_CARRIER_HZ * t).sin()
    })
    .expect("reference tone is finite")
}

/// Gains that make a 70 Hz (roughness) and a 4 Hz (fluctuation) fully
/// modulated reference evaluate to 1.0.
pub fn calibration_gains() -> Result<(f64, f64)> {
    let cfg = ModulationModelConfig::uncalibrated();
    let r = time_course_rms(&roughness_time_course(&reference_am_tone(70.0, 1.0), &cfg)?);
    let f = time_course_rms(&fluctuation_strength_time_course(
        &reference_am_tone(4.0, 1.0),
        &cfg,
    )?);
    Ok((1.0 / r, 1.0 / f))
}

/// Hilbert envelopes of the critical-band signals.
fn band_envelopes(signal: &TimeSignal, cfg: &ModulationModelConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let fs = signal.sample_rate_hz();
    let taps = fir_tap_count(cfg.band_edges_hz[0], fs);
    let edges = &cfg.band_edges_hz;
    let n = edges.len() - 1;
    let kernels = (0..n)
        .map(|b| {
            let lo = edges[b.saturating_sub(cfg.band_overlap)];
            let hi = edges[(b + 1 + cfg.band_overlap).min(n)];
            design_bandpass_fir_with_len(BandSpec::new(lo, hi), fs, taps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(filter_bank_zero_phase(signal, &kernels)?
        .iter()
        .map(|band| analytic(band.samples()).into_iter().map(|z| z.norm()).collect())
        .collect())
}

fn metric_time_course(
    envelopes: &[Vec<f64>],
    fs: f64,
    metric: &MetricConfig,
    excitation_range_db: f64,
) -> Result<Vec<f64>> {
    let len = envelopes.first().map_or(0, Vec::len);
    let frame = (metric.frame_s * fs).round() as usize;
    let hop = ((metric.hop_s * fs).round() as usize).max(1);
    if frame < 2 || frame > len {
        return Err(Error::SignalTooShort {
            required: frame,
            actual: len,
        });
    }
    let frames = (len - frame) / hop + 1;
    let window = hann(frame);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let weights: Vec<f64> = (0..=frame / 2)
        .map(|k| metric.weighting.weight(k as f64 * fs / frame as f64))
        .collect();
    let fft = fft_plan(frame, false);
    let floor = 10f64.powf(-excitation_range_db / 20.0);
    let mut buf = vec![Complex64::new(0.0, 0.0); frame];

    let mut course = Vec::with_capacity(frames);
    for f in 0..frames {
        let start = f * hop;
        let means: Vec<f64> = envelopes
            .iter()
            .map(|e| e[start..start + frame].iter().sum::<f64>() / frame as f64)
            .collect();
        let strongest = means.iter().cloned().fold(0.0, f64::max);
        let mut total = 0.0;
        let mut excitation = 0.0;
        for (env, &mean) in envelopes.iter().zip(&means) {
            if mean <= 0.0 || mean < strongest * floor {
                continue;
            }
            for ((b, &e), &w) in buf.iter_mut().zip(&env[start..start + frame]).zip(&window) {
                *b = Complex64::new((e - mean) * w, 0.0);
            }
            fft.process(&mut buf);
            let mut power = 0.0;
            for k in 1..=frame / 2 {
                let sides = if frame % 2 == 0 && k == frame / 2 { 1.0 } else { 2.0 };
                power += sides * (weights[k] * buf[k].norm()).powi(2);
            }
            let mod_rms = (power / (frame as f64 * window_power)).sqrt();
            let weight = mean * mean;
            excitation += weight;
            total += weight * (mod_rms / mean).powi(2);
        }
        let depth2 = if excitation > 0.0 { total / excitation } else { 0.0 };
        course.push(metric.gain * depth2);
    }
    Ok(course)
}

/// Roughness per frame (asper-like units once calibrated).
pub fn roughness_time_course(
    signal: &TimeSignal,
    cfg: &ModulationModelConfig,
) -> Result<Vec<f64>> {
    let env = band_envelopes(signal, cfg)?;
    metric_time_course(&env, signal.sample_rate_hz(), &cfg.roughness, cfg.excitation_range_db)
}

/// Fluctuation strength per frame (vacil-like units once calibrated).
pub fn fluctuation_strength_time_course(
    signal: &TimeSignal,
    cfg: &ModulationModelConfig,
) -> Result<Vec<f64>> {
    let env = band_envelopes(signal, cfg)?;
    metric_time_course(&env, signal.sample_rate_hz(), &cfg.fluctuation, cfg.excitation_range_db)
}

pub fn time_course_rms(course: &[f64]) -> f64 {
    crate::signal::rms(course)
}

/// `[pa_roughness, pa_fluctuation]`: RMS of each time course.
pub fn pa_features(signal: &TimeSignal, cfg: &ModulationModelConfig) -> Result<FeatureVector> {
    let env = band_envelopes(signal, cfg)?;
    let fs = signal.sample_rate_hz();
    let r = metric_time_course(&env, fs, &cfg.roughness, cfg.excitation_range_db)?;
    let f = metric_time_course(&env, fs, &cfg.fluctuation, cfg.excitation_range_db)?;
    FeatureVector::new(
        vec!["pa_roughness".into(), "pa_fluctuation".into()],
        vec![time_course_rms(&r), time_course_rms(&f)],
    )
}

/// PA followed by LES_FF. Both inputs are expected to share one scaling
/// convention; values are copied unchanged.
pub fn palff(pa: &FeatureVector, les_ff: &FeatureVector) -> Result<FeatureVector> {
    if pa.is_empty() || les_ff.is_empty() {
        return Err(Error::Precondition(
            "PALFF needs non-empty PA and LES_FF parts".into(),
        ));
    }
    pa.concat(les_ff)
}
