//! Acoustic end-of-line anomaly detection for geared motors.
//!
//! The pipeline band-pass filters a microphone record, extracts one of
//! several feature families (log-envelope spectrum, fault-frequency
//! amplitudes, log-mel and log-envelope spectrograms, psychoacoustic
//! modulation metrics), scores it with a one-class classifier trained on
//! nominal motors and maps the score to `good`, `warning` or `error` using
//! two thresholds calibrated on a labeled validation set.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod kinematics;
pub mod occ;
pub mod pipeline;
pub mod preprocess;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
