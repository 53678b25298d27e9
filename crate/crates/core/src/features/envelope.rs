//! Log-envelope spectrum and the feature sets read from it.
//!
//! The log-envelope spectrum of a band-passed record `x` is
//! `|FFT(ln(|analytic(x)|^2 + eps))|^2` on the non-negative frequencies.
//! Taking the log before the transform compresses impulsive background noise,
//! which is what makes it robust in a production hall.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::kinematics::{FaultFrequency, FreqDomain, LES_DOMAIN};
use crate::signal::{analytic, bandpass, fft_plan, BandSpec, Spectrum, TimeSignal, LOG_EPS};

/// Band-pass filters `signal` with `band`, then computes its log-envelope
/// spectrum.
pub fn log_envelope_spectrum(signal: &TimeSignal, band: BandSpec) -> Result<Spectrum> {
    let filtered = bandpass(signal, band)?;
    Ok(log_envelope_spectrum_prefiltered(&filtered))
}

/// Log-envelope spectrum of a record that is already band-limited.
pub fn log_envelope_spectrum_prefiltered(signal: &TimeSignal) -> Spectrum {
    let n = signal.len();
    let mut buf: Vec<Complex64> = analytic(signal.samples())
        .into_iter()
        .map(|z| Complex64::new((z.norm_sqr() + LOG_EPS).ln(), 0.0))
        .collect();
    fft_plan(n, false).process(&mut buf);
    Spectrum {
        bin_hz: signal.sample_rate_hz() / n as f64,
        amplitudes: buf[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect(),
    }
}

/// Inclusive bin index range whose frequencies fall into `[lo, hi]`.
fn bins_within(les: &Spectrum, lo: f64, hi: f64) -> Option<(usize, usize)> {
    let last = les.amplitudes.len().checked_sub(1)?;
    let first = (lo / les.bin_hz).ceil().max(0.0) as usize;
    let end = ((hi / les.bin_hz).floor() as usize).min(last);
    // Guard the rounding at exact boundaries.
    let first = if first > 0 && les.frequency(first - 1) >= lo {
        first - 1
    } else {
        first
    };
    let end = if end < last && les.frequency(end + 1) <= hi {
        end + 1
    } else {
        end
    };
    (first <= end && hi >= lo).then_some((first, end))
}

/// Every LES amplitude inside `domain` (inclusive), named `les_<freq>`.
pub fn les_limited(les: &Spectrum, domain: FreqDomain) -> Result<FeatureVector> {
    if les.amplitudes.is_empty() || les.max_frequency() < domain.hi {
        return Err(Error::Precondition(format!(
            "spectrum reaches {:.3} Hz, domain needs {} Hz",
            les.max_frequency(),
            domain.hi
        )));
    }
    let (names, values) = match bins_within(les, domain.lo, domain.hi) {
        Some((a, b)) => (a..=b)
            .map(|k| (format!("les_{}", les.frequency(k)), les.amplitudes[k]))
            .unzip(),
        None => (Vec::new(), Vec::new()),
    };
    FeatureVector::new(names, values)
}

/// [`les_limited`] over the default domain [10, 555.5] Hz.
pub fn les_limited_default(les: &Spectrum) -> Result<FeatureVector> {
    les_limited(les, LES_DOMAIN)
}

/// Maximum LES amplitude within `ff * (1 -+ tol)`; the nearest bin when the
/// window holds none. Ties resolve toward the lower frequency.
pub fn les_ff_value(les: &Spectrum, hz: f64, tol_frac: f64) -> Result<f64> {
    if les.amplitudes.is_empty() {
        return Err(Error::Precondition("empty spectrum".into()));
    }
    let value = match bins_within(les, hz * (1.0 - tol_frac), hz * (1.0 + tol_frac)) {
        Some((a, b)) => {
            let mut best = les.amplitudes[a];
            for &v in &les.amplitudes[a + 1..=b] {
                if v > best {
                    best = v;
                }
            }
            best
        }
        None => {
            let pos = hz / les.bin_hz;
            let below = pos.floor().max(0.0) as usize;
            let last = les.amplitudes.len() - 1;
            let k = if below >= last {
                last
            } else if pos - below as f64 <= (below + 1) as f64 - pos {
                below
            } else {
                below + 1
            };
            les.amplitudes[k]
        }
    };
    Ok(value)
}

/// One feature per fault frequency, named by its label, order preserved.
pub fn les_ff(les: &Spectrum, ffs: &[FaultFrequency], tol_frac: f64) -> Result<FeatureVector> {
    if ffs.is_empty() {
        return Err(Error::Precondition("no fault frequencies".into()));
    }
    let values = ffs
        .iter()
        .map(|ff| les_ff_value(les, ff.hz, tol_frac))
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(ffs.iter().map(|f| f.label.clone()).collect(), values)
}
