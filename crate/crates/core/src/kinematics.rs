//! Shaft and gear-mesh fault frequencies of a two-stage gear train.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-stage gear train driven at a rated motor speed.
///
/// `tooth_counts` are `[z1, z2, z3, z4]`: driving/driven wheel of stage one,
/// then driving/driven wheel of stage two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearTrain {
    pub motor_speed_hz: f64,
    pub tooth_counts: [u32; 4],
    #[serde(default = "default_tolerance")]
    pub speed_tolerance_frac: f64,
}

fn default_tolerance() -> f64 {
    0.01
}

impl GearTrain {
    /// 1375 rpm motor with a (21, 48, 11, 48) two-stage helical gear.
    pub fn reference() -> Self {
        Self {
            motor_speed_hz: 1375.0 / 60.0,
            tooth_counts: [21, 48, 11, 48],
            speed_tolerance_frac: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.motor_speed_hz.is_finite() && self.motor_speed_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "motor speed must be positive, got {}",
                self.motor_speed_hz
            )));
        }
        if let Some(z) = self.tooth_counts.iter().find(|&&z| z < 4) {
            return Err(Error::InvalidParameter(format!(
                "tooth counts must be >= 4, got {z}"
            )));
        }
        if !(self.speed_tolerance_frac > 0.0 && self.speed_tolerance_frac <= 0.05) {
            return Err(Error::InvalidParameter(format!(
                "speed tolerance must lie in (0, 0.05], got {}",
                self.speed_tolerance_frac
            )));
        }
        Ok(())
    }

    /// Rotational frequencies `[f1, f2, f3]` of input, intermediate and
    /// output shaft.
    pub fn shaft_speeds(&self) -> [f64; 3] {
        let [z1, z2, z3, z4] = self.tooth_counts.map(f64::from);
        let f1 = self.motor_speed_hz;
        let f2 = f1 * z1 / z2;
        let f3 = f2 * z3 / z4;
        [f1, f2, f3]
    }

    /// Mesh frequency of stage 1 or 2.
    pub fn mesh_frequency(&self, stage: usize) -> f64 {
        let f = self.shaft_speeds();
        match stage {
            1 => f[0] * f64::from(self.tooth_counts[0]),
            2 => f[1] * f64::from(self.tooth_counts[2]),
            _ => panic!("gear train has two stages, got stage {stage}"),
        }
    }

    /// Train with every frequency scaled by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            motor_speed_hz: self.motor_speed_hz * alpha,
            ..*self
        }
    }
}

impl Default for GearTrain {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    ShaftHarmonic,
    MeshCenter,
    MeshSideband,
}

/// A kinematically predicted frequency with a stable label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultFrequency {
    pub hz: f64,
    pub label: String,
    pub kind: FaultKind,
}

impl fmt::Display for FaultFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:.3} Hz)", self.label, self.hz)
    }
}

/// Inclusive frequency interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqDomain {
    pub lo: f64,
    pub hi: f64,
}

impl FreqDomain {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, hz: f64) -> bool {
        hz >= self.lo && hz <= self.hi
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::new(self.lo * alpha, self.hi * alpha)
    }
}

/// The analysis domain of the log-envelope spectrum features.
pub const LES_DOMAIN: FreqDomain = FreqDomain::new(10.0, 555.5);

const DEDUP_TOL_HZ: f64 = 1e-9;

fn sort_and_dedup(mut v: Vec<FaultFrequency>) -> Vec<FaultFrequency> {
    // Stable sort keeps generation order among equal frequencies.
    v.sort_by(|a, b| a.hz.total_cmp(&b.hz));
    let mut out: Vec<FaultFrequency> = Vec::with_capacity(v.len());
    for ff in v {
        match out.last() {
            Some(prev) if (ff.hz - prev.hz).abs() <= DEDUP_TOL_HZ => {}
            _ => out.push(ff),
        }
    }
    out
}

/// Harmonics 1..=3 of the input and intermediate shaft inside `domain`.
pub fn shaft_fault_frequencies(train: &GearTrain, domain: FreqDomain) -> Vec<FaultFrequency> {
    let f = train.shaft_speeds();
    let mut out = Vec::new();
    for n in 1..=2 {
        for i in 1..=3 {
            let hz = i as f64 * f[n - 1];
            if domain.contains(hz) {
                out.push(FaultFrequency {
                    hz,
                    label: format!("shaft{n}_h{i}"),
                    kind: FaultKind::ShaftHarmonic,
                });
            }
        }
    }
    sort_and_dedup(out)
}

/// Both mesh frequencies with sidebands at up to three multiples of the
/// stage's input shaft and of the next shaft.
pub fn mesh_fault_frequencies(train: &GearTrain, domain: FreqDomain) -> Vec<FaultFrequency> {
    let f = train.shaft_speeds();
    let mut out = Vec::new();
    for n in 1..=2 {
        let gmf = train.mesh_frequency(n);
        if domain.contains(gmf) {
            out.push(FaultFrequency {
                hz: gmf,
                label: format!("mesh{n}_center"),
                kind: FaultKind::MeshCenter,
            });
        }
        for m in 1..=2 {
            let shaft = n + m - 1;
            for i in 1..=3 {
                for sign in [-1.0, 1.0] {
                    let hz = gmf + sign * i as f64 * f[shaft - 1];
                    if domain.contains(hz) {
                        let s = if sign > 0.0 { '+' } else { '-' };
                        out.push(FaultFrequency {
                            hz,
                            label: format!("mesh{n}_sb{s}{i}f{shaft}"),
                            kind: FaultKind::MeshSideband,
                        });
                    }
                }
            }
        }
    }
    sort_and_dedup(out)
}

/// Union of shaft and mesh fault frequencies, ascending and deduplicated.
pub fn fault_frequency_set(train: &GearTrain, domain: FreqDomain) -> Vec<FaultFrequency> {
    let mut all = shaft_fault_frequencies(train, domain);
    all.extend(mesh_fault_frequencies(train, domain));
    sort_and_dedup(all)
}
