//! Deterministic signal transforms: FIR band-pass design, zero-phase
//! filtering, analytic signal, spectra, short-time transforms and DCT-II.
//!
//! All transforms are unnormalized. Downstream features are either robust
//! scaled or consumed through rank statistics, so absolute gain never matters.

use std::f64::consts::PI;

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Floor added before every logarithm so silent frames stay finite.
pub const LOG_EPS: f64 = 1e-12;

/// Number of lower-cutoff periods covered by the band-pass kernel.
pub const FIR_PERIODS: f64 = 7.5;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static POWER_RESPONSES: RefCell<HashMap<(Vec<u64>, usize), Arc<Vec<f64>>>> =
        RefCell::new(HashMap::new());
}

const POWER_RESPONSE_CACHE_LIMIT: usize = 64;

/// `|H(k)|^2` of `taps` on an `n`-point grid, cached per thread.
fn power_response(taps: &[f64], n: usize) -> Arc<Vec<f64>> {
    let key = (taps.iter().map(|t| t.to_bits()).collect::<Vec<_>>(), n);
    if let Some(hit) = POWER_RESPONSES.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    let mut h = to_complex(taps);
    h.resize(n, Complex64::new(0.0, 0.0));
    fft_plan(n, false).process(&mut h);
    let power = Arc::new(h.iter().map(|c| c.norm_sqr()).collect::<Vec<f64>>());
    POWER_RESPONSES.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= POWER_RESPONSE_CACHE_LIMIT {
            c.clear();
        }
        c.insert(key, Arc::clone(&power));
    });
    power
}

/// FFT plan of length `n` from a per-thread cache.
pub(crate) fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Uniformly sampled real-valued record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidSignal(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a signal by evaluating `f` at `t = n / fs` for `n < len`.
    pub fn from_fn(len: usize, sample_rate_hz: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..len).map(|n| f(n as f64 / sample_rate_hz)).collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Same sample rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate_hz)
    }
}

/// Pass band given by lower and upper cutoff in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandSpec {
    pub const fn new(low_hz: f64, high_hz: f64) -> Self {
        Self { low_hz, high_hz }
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let ok = self.low_hz > 0.0
            && self.low_hz < self.high_hz
            && self.high_hz < sample_rate_hz / 2.0
            && self.low_hz.is_finite()
            && self.high_hz.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                sample_rate_hz,
            })
        }
    }

    pub fn center_hz(&self) -> f64 {
        0.5 * (self.low_hz + self.high_hz)
    }
}

impl Default for BandSpec {
    fn default() -> Self {
        Self::new(1150.0, 5100.0)
    }
}

/// Linear-phase FIR kernel (odd length, symmetric taps).
#[derive(Debug, Clone, PartialEq)]
pub struct FirKernel {
    pub taps: Vec<f64>,
    pub design_band: BandSpec,
    pub design_rate_hz: f64,
}

impl FirKernel {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Complex single-pass frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.design_rate_hz;
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| Complex64::from_polar(h, -w * n as f64))
            .sum()
    }
}

/// One-sided amplitude spectrum; bin `k` sits at `k * bin_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bin_hz: f64,
    pub amplitudes: Vec<f64>,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }

    pub fn max_frequency(&self) -> f64 {
        self.bin_hz * self.amplitudes.len().saturating_sub(1) as f64
    }
}

/// Kernel length covering [`FIR_PERIODS`] periods of `low_hz`, forced odd.
pub fn fir_tap_count(low_hz: f64, sample_rate_hz: f64) -> usize {
    let n = (FIR_PERIODS * sample_rate_hz / low_hz).ceil() as usize;
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Symmetric Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / m).cos())
        .collect()
}

/// Symmetric Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / m).cos())
        .collect()
}

/// Window-method band-pass design with a Hamming window, scaled to unit gain
/// at the band center.
pub fn design_bandpass_fir(band: BandSpec, sample_rate_hz: f64) -> Result<FirKernel> {
    band.validate(sample_rate_hz)?;
    let n = fir_tap_count(band.low_hz, sample_rate_hz);
    design_bandpass_fir_with_len(band, sample_rate_hz, n)
}

/// Same as [`design_bandpass_fir`] with an explicit (odd) tap count.
pub fn design_bandpass_fir_with_len(
    band: BandSpec,
    sample_rate_hz: f64,
    taps: usize,
) -> Result<FirKernel> {
    band.validate(sample_rate_hz)?;
    if taps % 2 == 0 || taps < 3 {
        return Err(Error::InvalidParameter(format!(
            "tap count must be odd and >= 3, got {taps}"
        )));
    }
    let lo = band.low_hz / sample_rate_hz;
    let hi = band.high_hz / sample_rate_hz;
    let mid = (taps - 1) as f64 / 2.0;
    let window = hamming(taps);
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let t = n as f64 - mid;
            window[n] * (2.0 * hi * sinc(2.0 * hi * t) - 2.0 * lo * sinc(2.0 * lo * t))
        })
        .collect();
    // Force exact symmetry so the kernel is linear phase to rounding.
    for n in 0..taps / 2 {
        let avg = 0.5 * (h[n] + h[taps - 1 - n]);
        h[n] = avg;
        h[taps - 1 - n] = avg;
    }
    let mut kernel = FirKernel {
        taps: h,
        design_band: band,
        design_rate_hz: sample_rate_hz,
    };
    let gain = kernel.response(band.center_hz()).norm();
    for t in &mut kernel.taps {
        *t /= gain;
    }
    Ok(kernel)
}

/// Full linear convolution via FFT; output length `x.len() + h.len() - 1`.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two();
    let fwd = fft_plan(n, false);
    let inv = fft_plan(n, true);
    let mut a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(n, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a.truncate(out_len);
    a.into_iter().map(|c| c.re * scale).collect()
}

/// Mirror padding without repeating the edge sample.
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| x[n - 2 - i]));
    out
}

/// Zero-phase filtering: forward pass, time reversal, second pass, reversal.
/// Edges are handled by reflective padding of one kernel length per side.
pub fn filter_forward_backward(signal: &TimeSignal, kernel: &FirKernel) -> Result<TimeSignal> {
    let mut out = filter_bank_zero_phase(signal, std::slice::from_ref(kernel))?;
    Ok(out.remove(0))
}

/// Forward-backward filtering of one signal by several kernels. The two
/// passes are applied at once as the power response `|H(f)|^2` on a padded
/// transform that is long enough to avoid wrap-around, and the forward
/// transform of the signal is shared by all kernels.
pub fn filter_bank_zero_phase(
    signal: &TimeSignal,
    kernels: &[FirKernel],
) -> Result<Vec<TimeSignal>> {
    let taps = kernels.iter().map(FirKernel::len).max().unwrap_or(0);
    if signal.len() <= 3 * taps {
        return Err(Error::SignalTooShort {
            required: 3 * taps,
            actual: signal.len(),
        });
    }
    let padded = reflect_pad(signal.samples(), taps);
    let n = padded.len().next_power_of_two();
    let fwd = fft_plan(n, false);
    let inv = fft_plan(n, true);
    let mut x = to_complex(&padded);
    x.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut x);
    let scale = 1.0 / n as f64;
    kernels
        .iter()
        .map(|k| {
            let power = power_response(&k.taps, n);
            let mut y: Vec<Complex64> = x.iter().zip(power.iter()).map(|(a, p)| a * p).collect();
            inv.process(&mut y);
            let out = y[taps..taps + signal.len()].iter().map(|c| c.re * scale).collect();
            signal.with_samples(out)
        })
        .collect()
}

/// Designs the band-pass kernel for `band` at the signal's rate and applies it
/// forward and backward.
pub fn bandpass(signal: &TimeSignal, band: BandSpec) -> Result<TimeSignal> {
    let kernel = design_bandpass_fir(band, signal.sample_rate_hz())?;
    filter_forward_backward(signal, &kernel)
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Analytic signal by zeroing negative frequencies and doubling the interior
/// positive bins.
pub fn analytic_signal(signal: &TimeSignal) -> Vec<Complex64> {
    analytic(signal.samples())
}

pub(crate) fn analytic(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf = to_complex(x);
    fft_plan(n, false).process(&mut buf);
    let half = n / 2;
    for (k, c) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *c *= gain;
    }
    fft_plan(n, true).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Magnitude of the complex spectrum of `x`, bins `0..=n/2`.
pub(crate) fn rfft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut buf = to_complex(x);
    fft_plan(n, false).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf.into_iter().map(|c| c.norm()).collect()
}

/// Unnormalized one-sided magnitude spectrum.
pub fn magnitude_spectrum(signal: &TimeSignal) -> Spectrum {
    Spectrum {
        bin_hz: signal.sample_rate_hz() / signal.len() as f64,
        amplitudes: rfft_magnitudes(signal.samples()),
    }
}

/// Frame geometry shared by all short-time transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Framing {
    pub window: usize,
    pub hop: usize,
    pub frames: usize,
}

impl Framing {
    /// `window_len_s` and `overlap_frac` are converted to samples at
    /// `sample_rate_hz`; frames that do not fit completely are dropped.
    pub fn new(
        len: usize,
        sample_rate_hz: f64,
        window_len_s: f64,
        overlap_frac: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&overlap_frac) {
            return Err(Error::InvalidParameter(format!(
                "overlap fraction must lie in [0, 1), got {overlap_frac}"
            )));
        }
        let window = (window_len_s * sample_rate_hz).round() as usize;
        if window < 2 {
            return Err(Error::InvalidParameter(format!(
                "window of {window_len_s} s is shorter than two samples"
            )));
        }
        if window > len {
            return Err(Error::SignalTooShort {
                required: window,
                actual: len,
            });
        }
        let hop = ((window as f64 * (1.0 - overlap_frac)).round() as usize).max(1);
        let frames = (len - window) / hop + 1;
        Ok(Self {
            window,
            hop,
            frames,
        })
    }

    pub fn frame<'a>(&self, x: &'a [f64], k: usize) -> &'a [f64] {
        &x[k * self.hop..k * self.hop + self.window]
    }
}

/// Hamming-windowed magnitude spectra per frame (time-major).
pub(crate) fn stft_magnitudes(x: &[f64], framing: Framing) -> Vec<Vec<f64>> {
    let window = hamming(framing.window);
    let fft = fft_plan(framing.window, false);
    let mut buf = vec![Complex64::new(0.0, 0.0); framing.window];
    (0..framing.frames)
        .map(|k| {
            for ((b, &s), &w) in buf.iter_mut().zip(framing.frame(x, k)).zip(&window) {
                *b = Complex64::new(s * w, 0.0);
            }
            fft.process(&mut buf);
            buf[..framing.window / 2 + 1].iter().map(|c| c.norm()).collect()
        })
        .collect()
}

/// Log-magnitude spectrogram (rows = frames, columns = frequency bins).
pub fn log_spectrogram(
    signal: &TimeSignal,
    window_len_s: f64,
    overlap_frac: f64,
) -> Result<FeatureMatrix> {
    let framing = Framing::new(
        signal.len(),
        signal.sample_rate_hz(),
        window_len_s,
        overlap_frac,
    )?;
    if 2 * framing.window > signal.len() {
        return Err(Error::SignalTooShort {
            required: 2 * framing.window,
            actual: signal.len(),
        });
    }
    let bin_hz = signal.sample_rate_hz() / framing.window as f64;
    let values: Vec<Vec<f64>> = stft_magnitudes(signal.samples(), framing)
        .into_iter()
        .map(|row| row.into_iter().map(|a| (a + LOG_EPS).ln()).collect())
        .collect();
    let row_names = (0..framing.frames).map(|k| format!("t{k}")).collect();
    let col_names = (0..framing.window / 2 + 1)
        .map(|k| format!("f{}", k as f64 * bin_hz))
        .collect();
    FeatureMatrix::new(row_names, col_names, values)
}

/// Unnormalized DCT-II: `X[k] = sum_n x[n] cos(pi k (2n + 1) / 2N)`.
///
/// Evaluated through a length-2N FFT of the even extension.
pub fn dct2(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let m = 2 * n;
    let mut buf: Vec<Complex64> = x
        .iter()
        .chain(x.iter().rev())
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_plan(m, false).process(&mut buf);
    (0..n)
        .map(|k| {
            let twiddle = Complex64::from_polar(1.0, -PI * k as f64 / m as f64);
            0.5 * (buf[k] * twiddle).re
        })
        .collect()
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, secs: f64, fs: f64) -> TimeSignal {
        let n = (secs * fs) as usize;
        TimeSignal::from_fn(n, fs, |t| (2.0 * PI * freq * t).sin()).unwrap()
    }

    #[test]
    fn tap_counts() {
        let k = design_bandpass_fir(BandSpec::new(1150.0, 5100.0), 50_000.0).unwrap();
        assert_eq!(k.len(), 327);
        assert_eq!(fir_tap_count(10.0, 50_000.0), 37_501);
        assert!(design_bandpass_fir(BandSpec::new(5100.0, 1150.0), 50_000.0).is_err());
        assert!(design_bandpass_fir(BandSpec::new(1150.0, 25_000.0), 50_000.0).is_err());
    }

    #[test]
    fn kernel_is_symmetric_with_unit_center_gain() {
        let k = design_bandpass_fir(BandSpec::default(), 50_000.0).unwrap();
        let n = k.len();
        let peak = k.taps.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
        for i in 0..n / 2 {
            assert!((k.taps[i] - k.taps[n - 1 - i]).abs() <= 1e-12 * peak);
        }
        let db = 20.0 * k.response(3125.0).norm().log10();
        assert!(db.abs() < 1.0, "center gain {db} dB");
    }

    #[test]
    fn zero_signal_filters_to_zero() {
        let s = TimeSignal::new(vec![0.0; 5000], 50_000.0).unwrap();
        let y = bandpass(&s, BandSpec::default()).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_short_for_filter() {
        let s = tone(2000.0, 0.01, 50_000.0);
        assert!(matches!(
            bandpass(&s, BandSpec::default()),
            Err(Error::SignalTooShort { .. })
        ));
    }

    #[test]
    fn forward_backward_has_squared_magnitude() {
        let fs = 50_000.0;
        let k = design_bandpass_fir(BandSpec::default(), fs).unwrap();
        let s = tone(1400.0, 1.0, fs);
        let y = filter_forward_backward(&s, &k).unwrap();
        let mid = &y.samples()[10_000..40_000];
        let amp = rms(mid) * 2f64.sqrt();
        let expected = k.response(1400.0).norm().powi(2);
        assert!((amp - expected).abs() < 1e-3, "{amp} vs {expected}");
    }

    #[test]
    fn spectrum_examples() {
        let s = TimeSignal::new(vec![1.0; 8], 8.0).unwrap();
        let sp = magnitude_spectrum(&s);
        assert_eq!(sp.bin_hz, 1.0);
        assert_eq!(sp.amplitudes.len(), 5);
        assert!((sp.amplitudes[0] - 8.0).abs() < 1e-12);
        assert!(sp.amplitudes[1..].iter().all(|a| a.abs() < 1e-12));

        let mut imp = vec![0.0; 16];
        imp[0] = 1.0;
        let sp = magnitude_spectrum(&TimeSignal::new(imp, 16.0).unwrap());
        assert!(sp.amplitudes.iter().all(|a| (a - 1.0).abs() < 1e-12));

        let n = 64;
        let s = TimeSignal::from_fn(n, n as f64, |t| (2.0 * PI * 5.0 * t).sin()).unwrap();
        let sp = magnitude_spectrum(&s);
        for (k, a) in sp.amplitudes.iter().enumerate() {
            if k == 5 {
                assert!((a - n as f64 / 2.0).abs() < 1e-9);
            } else {
                assert!(*a <= 1e-9 * n as f64);
            }
        }
    }

    #[test]
    fn spectrogram_frame_counts() {
        let fs = 50_000.0;
        let s = TimeSignal::from_fn(262_144, fs, |t| (2.0 * PI * 2000.0 * t).sin()).unwrap();
        let m = log_spectrogram(&s, 0.0088, 0.5).unwrap();
        assert_eq!(m.n_rows(), 1190);
        assert_eq!(m.n_cols(), 221);
        let m = log_spectrogram(&s, 1.75, 0.5).unwrap();
        assert_eq!(m.n_rows(), 4);
        assert!(log_spectrogram(&s, 6.0, 0.5).is_err());
        assert!(log_spectrogram(&s, 0.01, 1.0).is_err());
    }

    #[test]
    fn constant_signal_frames_identical() {
        let s = TimeSignal::new(vec![0.3; 10_000], 1000.0).unwrap();
        let m = log_spectrogram(&s, 0.5, 0.25).unwrap();
        for r in 1..m.n_rows() {
            assert_eq!(m.row(r), m.row(0));
        }
    }

    #[test]
    fn dct_examples() {
        let x = dct2(&[1.0, 1.0, 1.0, 1.0]);
        assert!((x[0] - 4.0).abs() < 1e-12);
        assert!(x[1..].iter().all(|v| v.abs() < 1e-12));

        let x = dct2(&[1.0, 0.0]);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - (PI / 4.0).cos()).abs() < 1e-12);

        let x = dct2(&[1.0, -1.0, 1.0, -1.0]);
        assert!(x[0].abs() < 1e-12);
        let top = x[3].abs();
        assert!(x[..3].iter().all(|v| v.abs() < top));
    }

    #[test]
    fn analytic_of_cosine_has_unit_magnitude() {
        let fs = 50_000.0;
        let s = TimeSignal::from_fn(50_000, fs, |t| (2.0 * PI * 1000.0 * t).cos()).unwrap();
        let a = analytic_signal(&s);
        for (z, x) in a.iter().zip(s.samples()) {
            assert!((z.re - x).abs() < 1e-9);
        }
        let edge = 500;
        for z in &a[edge..a.len() - edge] {
            assert!((z.norm() - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn reflect_padding_mirrors() {
        assert_eq!(
            reflect_pad(&[1.0, 2.0, 3.0, 4.0], 2),
            vec![3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]
        );
    }
}
