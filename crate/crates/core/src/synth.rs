//! Synthetic geared-motor recordings with known fault signatures and
//! parametric background disturbances.
//!
//! A healthy motor is a set of mesh tones, amplitude-modulated at the shaft
//! speeds, over white noise. Faults are either impulsive (a periodic train of
//! resonance bursts) or circumferential (extra amplitude modulation). The
//! disturbances are caricatures of plant noise, scaled to a fixed ratio of
//! the motor's RMS.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{write_wav, DisturbanceKind, Manifest, NoiseTag, Record, Split};
use crate::error::{Error, Result};
use crate::evaluation::Label;
use crate::kinematics::{fault_frequency_set, FaultFrequency, FreqDomain, GearTrain, LES_DOMAIN};
use crate::occ::stream_seed;
use crate::signal::{bandpass, rms, BandSpec, TimeSignal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotorRecipe {
    pub train: GearTrain,
    /// Relative deviation of the actual from the nominal motor speed.
    pub speed_deviation_frac: f64,
    /// Fundamental amplitude of each mesh stage; harmonic `h` gets `1/h^2` of it.
    pub mesh_amplitudes: [f64; 2],
    pub sideband_depth: f64,
    pub noise_floor_rms: f64,
    pub resonance_hz: f64,
    pub resonance_q: f64,
    /// Overall gain applied last (microphone distance, mounting).
    pub level_gain: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl Default for MotorRecipe {
    fn default() -> Self {
        Self {
            train: GearTrain::reference(),
            speed_deviation_frac: 0.0,
            mesh_amplitudes: [0.03, 0.02],
            sideband_depth: 0.2,
            noise_floor_rms: 0.01,
            resonance_hz: 3000.0,
            resonance_q: 10.0,
            level_gain: 1.0,
            duration_s: (1 << 18) as f64 / 50_000.0,
            sample_rate_hz: 50_000.0,
            seed: 0,
        }
    }
}

impl MotorRecipe {
    pub fn len(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let bad = |what: &str| Err(Error::InvalidParameter(format!("motor recipe: {what}")));
        if !(-0.01..=0.01).contains(&self.speed_deviation_frac) {
            return bad("speed deviation outside +-1%");
        }
        if self.mesh_amplitudes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return bad("mesh amplitudes must be positive");
        }
        if !(0.0..1.0).contains(&self.sideband_depth) {
            return bad("sideband depth must lie in [0, 1)");
        }
        if !(self.noise_floor_rms > 0.0 && self.level_gain > 0.0 && self.resonance_q > 0.0) {
            return bad("noise floor, gain and Q must be positive");
        }
        if !(self.resonance_hz > 0.0 && self.resonance_hz < 0.5 * self.sample_rate_hz) {
            return bad("resonance must lie below Nyquist");
        }
        if self.is_empty() || self.len() > 1 << 20 {
            return bad("record length must lie in 1..=2^20 samples");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultSignature {
    None,
    Impulsive,
    Circumferential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRecipe {
    pub kind: FaultSignature,
    pub target_ff: Option<FaultFrequency>,
    pub severity: f64,
}

/// Burst peak per unit severity, relative to the noise floor RMS.
pub const IMPULSE_SCALE: f64 = 12.0;
/// Extra modulation depth per unit severity.
pub const CIRCUMFERENTIAL_SCALE: f64 = 0.5;

impl FaultRecipe {
    pub fn healthy() -> Self {
        Self {
            kind: FaultSignature::None,
            target_ff: None,
            severity: 0.0,
        }
    }

    pub fn new(kind: FaultSignature, target: FaultFrequency, severity: f64) -> Self {
        Self {
            kind,
            target_ff: Some(target),
            severity,
        }
    }

    pub fn validate(&self, train: &GearTrain) -> Result<()> {
        if !(self.severity >= 0.0 && self.severity.is_finite()) {
            return Err(Error::InvalidParameter("severity must be non-negative".into()));
        }
        if self.kind == FaultSignature::None {
            return Ok(());
        }
        let target = self.target_ff.as_ref().ok_or_else(|| {
            Error::InvalidParameter("a fault needs a target frequency".into())
        })?;
        let known = fault_frequency_set(train, FreqDomain::new(0.0, f64::INFINITY));
        if !known
            .iter()
            .any(|f| f.label == target.label && (f.hz - target.hz).abs() <= 1e-6 * f.hz.max(1.0))
        {
            return Err(Error::InvalidParameter(format!(
                "target {target} is not a fault frequency of the gear train"
            )));
        }
        Ok(())
    }
}

fn gen_normal(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    let d = Normal::new(0.0, sd).expect("finite standard deviation");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Renders one motor. Randomness comes from per-purpose streams of
/// `recipe.seed`, so a zero-severity fault reproduces the healthy record.
pub fn synth_motor(recipe: &MotorRecipe, fault: &FaultRecipe) -> Result<TimeSignal> {
    recipe.validate()?;
    fault.validate(&recipe.train)?;
    let n = recipe.len();
    let fs = recipe.sample_rate_hz;
    let alpha = 1.0 + recipe.speed_deviation_frac;
    let train = recipe.train.scaled(alpha);
    let [f1, f2, f3] = train.shaft_speeds();
    let shafts = [(f1, f2), (f2, f3)];

    let mut noise_rng = ChaCha8Rng::seed_from_u64(stream_seed(recipe.seed, 0));
    let mut phase_rng = ChaCha8Rng::seed_from_u64(stream_seed(recipe.seed, 1));
    let mut fault_rng = ChaCha8Rng::seed_from_u64(stream_seed(recipe.seed, 2));

    let mut tones = vec![0.0; n];
    for stage in 0..2 {
        let gmf = train.mesh_frequency(stage + 1);
        let (fa, fb) = shafts[stage];
        let (pa, pb): (f64, f64) = (phase_rng.gen::<f64>() * 2.0 * PI, phase_rng.gen::<f64>() * 2.0 * PI);
        for h in 1..=3 {
            let f = h as f64 * gmf;
            let amp = recipe.mesh_amplitudes[stage] / (h * h) as f64;
            let ph: f64 = phase_rng.gen::<f64>() * 2.0 * PI;
            if f >= 0.5 * fs {
                continue;
            }
            for (i, v) in tones.iter_mut().enumerate() {
                let t = i as f64 / fs;
                let am = 1.0
                    + recipe.sideband_depth * (2.0 * PI * fa * t + pa).cos()
                    + recipe.sideband_depth * (2.0 * PI * fb * t + pb).cos();
                *v += amp * am * (2.0 * PI * f * t + ph).sin();
            }
        }
    }
    let mut noise = gen_normal(&mut noise_rng, n, recipe.noise_floor_rms);

    if fault.kind != FaultSignature::None && fault.severity > 0.0 {
        let target_hz = fault.target_ff.as_ref().map(|f| f.hz * alpha).unwrap_or(0.0);
        match fault.kind {
            FaultSignature::Circumferential => {
                let depth = CIRCUMFERENTIAL_SCALE * fault.severity;
                let psi: f64 = fault_rng.gen::<f64>() * 2.0 * PI;
                for (i, (a, b)) in tones.iter_mut().zip(noise.iter_mut()).enumerate() {
                    let m = 1.0 + depth * (2.0 * PI * target_hz * i as f64 / fs + psi).cos();
                    *a *= m;
                    *b *= m;
                }
            }
            FaultSignature::Impulsive => {
                let peak = IMPULSE_SCALE * recipe.noise_floor_rms * fault.severity;
                let burst = resonance_burst(recipe.resonance_hz, recipe.resonance_q, fs);
                let period = fs / target_hz;
                let mut at = fault_rng.gen::<f64>() * period;
                while at < n as f64 {
                    let start = at.round() as usize;
                    for (k, &b) in burst.iter().enumerate() {
                        match tones.get_mut(start + k) {
                            Some(v) => *v += peak * b,
                            None => break,
                        }
                    }
                    at += period;
                }
            }
            FaultSignature::None => {}
        }
    }

    let out = tones
        .iter()
        .zip(&noise)
        .map(|(a, b)| recipe.level_gain * (a + b))
        .collect();
    TimeSignal::new(out, fs)
}

/// Unit-peak-envelope decaying sinusoid lasting six time constants.
fn resonance_burst(f_hz: f64, q: f64, fs: f64) -> Vec<f64> {
    let tau = q / (PI * f_hz);
    let len = (6.0 * tau * fs).ceil() as usize;
    (0..len)
        .map(|k| {
            let t = k as f64 / fs;
            (-t / tau).exp() * (2.0 * PI * f_hz * t).sin()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceLevel {
    Low,
    Loud,
}

impl DisturbanceLevel {
    /// Disturbance-to-motor RMS ratio.
    pub fn rms_ratio(&self) -> f64 {
        match self {
            DisturbanceLevel::Low => 0.5,
            DisturbanceLevel::Loud => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceRecipe {
    pub kind: DisturbanceKind,
    pub level: DisturbanceLevel,
    pub seed: u64,
}

pub fn inject_disturbance(signal: &TimeSignal, rec: &DisturbanceRecipe) -> Result<TimeSignal> {
    inject_disturbance_with_ratio(signal, rec.kind, rec.level.rms_ratio(), rec.seed)
}

/// Adds a disturbance whose RMS is `ratio` times the signal's RMS.
pub fn inject_disturbance_with_ratio(
    signal: &TimeSignal,
    kind: DisturbanceKind,
    ratio: f64,
    seed: u64,
) -> Result<TimeSignal> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("disturbance ratio {ratio}")));
    }
    if ratio == 0.0 {
        return Ok(signal.clone());
    }
    let d = disturbance(kind, signal.len(), signal.sample_rate_hz(), seed)?;
    let scale = ratio * signal.rms() / rms(&d).max(f64::MIN_POSITIVE);
    let out = signal
        .samples()
        .iter()
        .zip(&d)
        .map(|(s, v)| s + scale * v)
        .collect();
    signal.with_samples(out)
}

/// Raw disturbance waveform of arbitrary scale.
pub fn disturbance(kind: DisturbanceKind, n: usize, fs: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match kind {
        DisturbanceKind::Hammer => hammer(&mut rng, n, fs),
        DisturbanceKind::AirPressure => air_pressure(&mut rng, n, fs)?,
        DisturbanceKind::Music => music(&mut rng, n, fs),
        DisturbanceKind::Speech => speech(&mut rng, n, fs),
        DisturbanceKind::Ventilation => ventilation(&mut rng, n, fs),
        DisturbanceKind::Wrench => wrench(&mut rng, n, fs),
    })
}

/// Raised-cosine gate of `len` samples with `edge`-sample ramps.
fn gate(len: usize, edge: usize) -> impl Fn(usize) -> f64 {
    let edge = edge.max(1).min(len / 2).max(1);
    move |k| {
        let d = k.min(len.saturating_sub(1 + k));
        if d >= edge {
            1.0
        } else {
            0.5 * (1.0 - (PI * d as f64 / edge as f64).cos())
        }
    }
}

/// Sparse strikes: a broadband click with a fast decay over a slower
/// two-mode plate ring.
fn hammer(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let strikes = rng.gen_range(3..=8);
    let len = (0.15 * fs) as usize;
    let normal = Normal::new(0.0, 1.0).unwrap();
    for _ in 0..strikes {
        let start = rng.gen_range(0..n.saturating_sub(len).max(1));
        let amp = rng.gen_range(0.5..1.0);
        let low = rng.gen_range(200.0..900.0);
        let high = rng.gen_range(1500.0..4000.0_f64.min(0.45 * fs));
        for k in 0..len.min(n - start) {
            let t = k as f64 / fs;
            let click = normal.sample(rng) * (-t / 0.002).exp();
            let ring = ((2.0 * PI * low * t).sin() + 0.6 * (2.0 * PI * high * t).sin()) * (-t / 0.03).exp();
            out[start + k] += amp * (click + ring);
        }
    }
    out
}

/// Gated bursts of band-limited noise.
fn air_pressure(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Result<Vec<f64>> {
    let white = TimeSignal::new(gen_normal(rng, n, 1.0), fs)?;
    let hiss = bandpass(&white, BandSpec::new(500.0, 8000.0_f64.min(0.45 * fs)))?;
    let mut out = vec![0.0; n];
    for _ in 0..rng.gen_range(2..=5) {
        let len = ((rng.gen_range(0.2..0.8) * fs) as usize).min(n);
        let start = rng.gen_range(0..=n - len);
        let g = gate(len, (0.01 * fs) as usize);
        for k in 0..len {
            out[start + k] += g(k) * hiss.samples()[start + k];
        }
    }
    Ok(out)
}

/// A cycle of four-tone chords with harmonics and a 2 Hz beat.
fn music(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let chord_len = (rng.gen_range(0.5..1.0) * fs) as usize;
    let chords: Vec<[f64; 4]> = (0..4)
        .map(|_| std::array::from_fn(|_| rng.gen_range(150.0..900.0)))
        .collect();
    let g = gate(chord_len, (0.02 * fs) as usize);
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let chord = &chords[(i / chord_len) % chords.len()];
            let mut v = 0.0;
            for &f0 in chord {
                for h in 1..=6 {
                    let f = h as f64 * f0;
                    if f < 0.45 * fs {
                        v += (2.0 * PI * f * t).sin() / (h * h) as f64;
                    }
                }
            }
            v * g(i % chord_len) * (1.0 + 0.5 * (2.0 * PI * 2.0 * t).cos())
        })
        .collect()
}

/// Noise through three slowly moving resonators with a syllabic envelope.
fn speech(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let formants = [(300.0, 900.0), (900.0, 2200.0), (2200.0, 3000.0)];
    let syllabic: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0.3..8.0), rng.gen::<f64>() * 2.0 * PI))
        .collect();
    let sweeps: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0.2..2.0), rng.gen::<f64>() * 2.0 * PI))
        .collect();
    let excitation = gen_normal(rng, n, 1.0);
    let r = (-PI * 150.0 / fs).exp();
    let mut state = [[0.0_f64; 2]; 3];
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let mut v = 0.0;
            for (j, &(lo, hi)) in formants.iter().enumerate() {
                let (rate, ph) = sweeps[j];
                let fc = lo + (hi - lo) * 0.5 * (1.0 + (2.0 * PI * rate * t + ph).sin());
                let y = excitation[i] + 2.0 * r * (2.0 * PI * fc / fs).cos() * state[j][0]
                    - r * r * state[j][1];
                state[j] = [y, state[j][0]];
                v += y;
            }
            let env: f64 = syllabic
                .iter()
                .map(|&(f, ph)| (2.0 * PI * f * t + ph).sin())
                .sum::<f64>()
                .max(0.0);
            v * env
        })
        .collect()
}

/// Low-passed broadband noise plus mains hum.
fn ventilation(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let a = (-2.0 * PI * 150.0 / fs).exp();
    let white = gen_normal(rng, n, 1.0);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut broadband: Vec<f64> = white
        .iter()
        .map(|&x| {
            s1 = a * s1 + (1.0 - a) * x;
            s2 = a * s2 + (1.0 - a) * s1;
            s2
        })
        .collect();
    let norm = rms(&broadband).max(f64::MIN_POSITIVE);
    let phases: [f64; 3] = std::array::from_fn(|_| rng.gen::<f64>() * 2.0 * PI);
    for (i, v) in broadband.iter_mut().enumerate() {
        let t = i as f64 / fs;
        let hum: f64 = [(50.0, 1.0), (100.0, 0.5), (150.0, 0.3)]
            .iter()
            .zip(&phases)
            .map(|(&(f, a), ph)| a * (2.0 * PI * f * t + ph).sin())
            .sum();
        *v = *v / norm + hum;
    }
    broadband
}

/// A whining tone with a click train, active for half of the record.
fn wrench(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let active = n / 2;
    let start = rng.gen_range(0..=n - active);
    let whine = rng.gen_range(2000.0..6000.0_f64.min(0.4 * fs));
    let click_hz = rng.gen_range(20.0..40.0);
    let click_period = (fs / click_hz) as usize;
    let click_len = (0.003 * fs) as usize;
    let g = gate(active, (0.02 * fs) as usize);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut out = vec![0.0; n];
    let mut phase = 0.0;
    for k in 0..active {
        let t = k as f64 / fs;
        let f = whine * (1.0 + 0.01 * (2.0 * PI * 5.0 * t).sin());
        phase += 2.0 * PI * f / fs;
        let mut v = phase.sin();
        if 2.0 * f < 0.45 * fs {
            v += 0.3 * (2.0 * phase).sin();
        }
        let c = k % click_period;
        if c < click_len {
            v += 2.0 * normal.sample(rng) * (-(c as f64) / (0.0005 * fs)).exp();
        }
        out[start + k] = g(k) * v;
    }
    out
}

/// Composition of a synthetic study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub train_good: usize,
    pub train_warning: usize,
    pub validation_good: usize,
    pub validation_warning: usize,
    pub validation_error: usize,
    /// Training-good motors replayed under disturbances.
    pub disturbance_good: usize,
    /// Validation-error motors replayed under disturbances.
    pub disturbance_error: usize,
    pub disturbance_level: DisturbanceLevel,
    pub good_severity: (f64, f64),
    pub warning_severity: (f64, f64),
    pub error_severity: (f64, f64),
    /// Log-uniform range of the per-motor level gain.
    pub level_gain_range: (f64, f64),
    pub sideband_depth_range: (f64, f64),
    /// Relative spread of each mesh amplitude around the base recipe.
    pub mesh_amplitude_spread: f64,
    pub base: MotorRecipe,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            train_good: 25,
            train_warning: 17,
            validation_good: 12,
            validation_warning: 10,
            validation_error: 18,
            disturbance_good: 2,
            disturbance_error: 2,
            disturbance_level: DisturbanceLevel::Loud,
            good_severity: (0.0, 0.05),
            warning_severity: (0.2, 0.4),
            error_severity: (0.8, 1.2),
            level_gain_range: (0.5, 2.0),
            sideband_depth_range: (0.1, 0.3),
            mesh_amplitude_spread: 0.3,
            base: MotorRecipe::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let cells = [
            self.train_good,
            self.validation_good,
            self.validation_error,
        ];
        if cells.contains(&0) {
            return Err(Error::InvalidParameter(
                "dataset needs training-good, validation-good and validation-error records".into(),
            ));
        }
        if self.disturbance_good > self.train_good || self.disturbance_error > self.validation_error {
            return Err(Error::InvalidParameter(
                "disturbance motors must be drawn from existing motors".into(),
            ));
        }
        for (lo, hi) in [
            self.good_severity,
            self.warning_severity,
            self.error_severity,
            self.level_gain_range,
            self.sideband_depth_range,
        ] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid range ({lo}, {hi})")));
            }
        }
        if !(self.level_gain_range.0 > 0.0) || self.sideband_depth_range.1 >= 1.0 {
            return Err(Error::InvalidParameter("invalid gain or depth range".into()));
        }
        if !(0.0..1.0).contains(&self.mesh_amplitude_spread) {
            return Err(Error::InvalidParameter("mesh amplitude spread must lie in [0, 1)".into()));
        }
        self.base.validate()
    }
}

/// One record of a synthetic study, ready to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRecord {
    pub path: PathBuf,
    pub label: Label,
    pub split: Split,
    pub motor: MotorRecipe,
    pub fault: FaultRecipe,
    pub disturbance: Option<DisturbanceRecipe>,
}

impl PlannedRecord {
    pub fn noise(&self) -> NoiseTag {
        self.disturbance
            .map_or(NoiseTag::None, |d| NoiseTag::Disturbance(d.kind))
    }

    pub fn render(&self) -> Result<TimeSignal> {
        let clean = synth_motor(&self.motor, &self.fault)?;
        match &self.disturbance {
            Some(d) => inject_disturbance(&clean, d),
            None => Ok(clean),
        }
    }

    pub fn record(&self) -> Result<Record> {
        let recipes = serde_json::json!({
            "motor": self.motor,
            "fault": self.fault,
            "disturbance": self.disturbance,
        });
        Ok(Record {
            path: self.path.clone(),
            label: self.label,
            noise: self.noise(),
            split: self.split,
            recipes: Some(recipes),
        })
    }
}

/// Draws all recipes of a study. Motor `i` uses RNG streams derived from
/// `(seed, i)`, so adding records never changes earlier ones.
pub fn plan_dataset(spec: &DatasetSpec, seed: u64) -> Result<Vec<PlannedRecord>> {
    spec.validate()?;
    let shaft_targets: Vec<FaultFrequency> = fault_frequency_set(&spec.base.train, LES_DOMAIN)
        .into_iter()
        .filter(|f| f.label == "shaft1_h1" || f.label == "shaft2_h1")
        .collect();
    if shaft_targets.is_empty() {
        return Err(Error::InvalidParameter(
            "gear train has no shaft fundamentals inside the envelope domain".into(),
        ));
    }
    let groups = [
        (Split::Train, Label::Good, spec.train_good),
        (Split::Train, Label::Warning, spec.train_warning),
        (Split::Validation, Label::Good, spec.validation_good),
        (Split::Validation, Label::Warning, spec.validation_warning),
        (Split::Validation, Label::Error, spec.validation_error),
    ];
    let mut out = Vec::new();
    let mut motor_index = 0u64;
    for (split, label, count) in groups {
        let band = match label {
            Label::Good => spec.good_severity,
            Label::Warning => spec.warning_severity,
            Label::Error => spec.error_severity,
        };
        for k in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, motor_index));
            let base = &spec.base;
            let spread = spec.mesh_amplitude_spread;
            let (g_lo, g_hi) = spec.level_gain_range;
            let motor = MotorRecipe {
                speed_deviation_frac: rng.gen_range(-0.01..=0.01),
                mesh_amplitudes: std::array::from_fn(|s| {
                    base.mesh_amplitudes[s] * rng.gen_range(1.0 - spread..=1.0 + spread)
                }),
                sideband_depth: rng.gen_range(spec.sideband_depth_range.0..=spec.sideband_depth_range.1),
                level_gain: (rng.gen_range(g_lo.ln()..=g_hi.ln())).exp(),
                seed: stream_seed(seed ^ 0x6d6f_746f_7273, motor_index),
                ..base.clone()
            };
            let kind = if rng.gen_bool(0.5) {
                FaultSignature::Impulsive
            } else {
                FaultSignature::Circumferential
            };
            let target = shaft_targets[rng.gen_range(0..shaft_targets.len())].clone();
            let severity = rng.gen_range(band.0..=band.1);
            out.push(PlannedRecord {
                path: PathBuf::from(format!("{split}/{label}_{k:03}.wav")),
                label,
                split,
                motor,
                fault: FaultRecipe::new(kind, target, severity),
                disturbance: None,
            });
            motor_index += 1;
        }
    }

    let replayed: Vec<PlannedRecord> = out
        .iter()
        .filter(|r| r.split == Split::Train && r.label == Label::Good)
        .take(spec.disturbance_good)
        .chain(
            out.iter()
                .filter(|r| r.split == Split::Validation && r.label == Label::Error)
                .take(spec.disturbance_error),
        )
        .cloned()
        .collect();
    let mut dist_index = 0u64;
    for (m, base) in replayed.iter().enumerate() {
        let conditions = std::iter::once(None).chain(DisturbanceKind::ALL.iter().map(Some));
        for kind in conditions {
            let disturbance = kind.map(|&kind| DisturbanceRecipe {
                kind,
                level: spec.disturbance_level,
                seed: stream_seed(seed ^ 0x6469_7374, dist_index),
            });
            dist_index += 1;
            let tag = kind.map_or("none", |k| k.as_str());
            out.push(PlannedRecord {
                path: PathBuf::from(format!("disturbance/{}_{m:02}_{tag}.wav", base.label)),
                split: Split::Disturbance,
                disturbance,
                ..base.clone()
            });
        }
    }
    Ok(out)
}

/// Renders every planned record to `out_dir` and writes `manifest.json`.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64, out_dir: &Path) -> Result<Manifest> {
    use rayon::prelude::*;

    let plan = plan_dataset(spec, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    plan.par_iter()
        .map(|p| write_wav(&out_dir.join(&p.path), &p.render()?))
        .collect::<Result<Vec<()>>>()?;
    let records = plan.iter().map(PlannedRecord::record).collect::<Result<_>>()?;
    let manifest = Manifest::new(records, out_dir)?;
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}
