//! ROC analysis, two-threshold calibration, three-class verdicts and the
//! missed-fault / pseudo-fault metrics.
//!
//! All comparisons accept on `score >= t`. The report names follow the
//! plant convention: on `ROC_g` the x axis is the share of faulty motors
//! accepted (missed faults) and the y axis the share of good motors accepted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Good,
    Warning,
    Error,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Good, Label::Warning, Label::Error];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Good => "good",
            Label::Warning => "warning",
            Label::Error => "error",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "good" => Ok(Label::Good),
            "warning" => Ok(Label::Warning),
            "error" => Ok(Label::Error),
            other => Err(Error::InvalidParameter(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScore {
    pub score: f64,
    pub label: Label,
    /// Background condition, e.g. `none`, `low` or a disturbance kind.
    pub noise_tag: Option<String>,
}

impl LabeledScore {
    pub fn new(score: f64, label: Label) -> Self {
        Self {
            score,
            label,
            noise_tag: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub t_e: f64,
    pub t_w: f64,
}

impl ThresholdPair {
    pub fn new(t_e: f64, t_w: f64) -> Result<Self> {
        if !(t_e.is_finite() && t_w.is_finite()) {
            return Err(Error::NonFinite("thresholds".into()));
        }
        if t_e > t_w {
            return Err(Error::InvalidParameter(format!(
                "t_e = {t_e} exceeds t_w = {t_w}"
            )));
        }
        Ok(Self { t_e, t_w })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from (0, 0) to (1, 1), by decreasing threshold.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC of the rule `accept iff score >= t`, swept over all distinct scores.
pub fn roc(scores: &[LabeledScore], accept: &[Label]) -> Result<RocCurve> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in scores {
        if !s.score.is_finite() {
            return Err(Error::NonFinite("score".into()));
        }
        if accept.contains(&s.label) {
            pos.push(s.score);
        } else {
            neg.push(s.score);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Precondition(
            "ROC needs samples inside and outside the accepted label set".into(),
        ));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&v| (v, true))
        .chain(neg.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        while i < all.len() && all[i].0 == t {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let p = (fp as f64 / nn, tp as f64 / np);
        let last = *points.last().unwrap();
        auc += (p.0 - last.0) * (p.1 + last.1) / 2.0;
        points.push(p);
    }
    Ok(RocCurve { points, auc })
}

pub fn roc_good(scores: &[LabeledScore]) -> Result<RocCurve> {
    roc(scores, &[Label::Good])
}

pub fn roc_good_warning(scores: &[LabeledScore]) -> Result<RocCurve> {
    roc(scores, &[Label::Good, Label::Warning])
}

/// Calibrates `t_e` so that no good validation motor is rejected, and `t_w`
/// so that as many non-error motors are called good as are labeled good.
pub fn extract_thresholds(val: &[LabeledScore]) -> Result<ThresholdPair> {
    if val.iter().any(|s| !s.score.is_finite()) {
        return Err(Error::NonFinite("validation score".into()));
    }
    let t_e = val
        .iter()
        .filter(|s| s.label == Label::Good)
        .map(|s| s.score)
        .fold(f64::INFINITY, f64::min);
    if !t_e.is_finite() || !val.iter().any(|s| s.label == Label::Error) {
        return Err(Error::Precondition(
            "validation needs at least one good and one error sample".into(),
        ));
    }
    let mut rest: Vec<f64> = val
        .iter()
        .filter(|s| s.label != Label::Error)
        .map(|s| s.score)
        .collect();
    rest.sort_by(|a, b| b.total_cmp(a));
    let n = val.iter().filter(|s| s.label == Label::Good).count();
    let t_w = rest[n - 1].max(t_e);
    ThresholdPair::new(t_e, t_w)
}

pub fn classify(score: f64, th: &ThresholdPair) -> Label {
    if score < th.t_e {
        Label::Error
    } else if score < th.t_w {
        Label::Warning
    } else {
        Label::Good
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Error-labeled samples not predicted as error.
    pub mf: usize,
    /// Good-labeled samples predicted as error.
    pub pf: usize,
    /// Three-class accuracy.
    pub acc: f64,
}

pub fn metrics(predictions: &[Label], labels: &[Label]) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Precondition("metrics of an empty set".into()));
    }
    let mut mf = 0;
    let mut pf = 0;
    let mut hits = 0;
    for (&p, &l) in predictions.iter().zip(labels) {
        mf += usize::from(l == Label::Error && p != Label::Error);
        pf += usize::from(l == Label::Good && p == Label::Error);
        hits += usize::from(p == l);
    }
    Ok(Metrics {
        mf,
        pf,
        acc: hits as f64 / labels.len() as f64,
    })
}

/// One row of the study report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub feature_set: String,
    pub model: String,
    pub seed: u64,
    pub auc_g: f64,
    pub auc_w: f64,
    pub mf_v: usize,
    pub mf_t: usize,
    pub pf_t: usize,
    pub acc: f64,
}

/// Best value over the runs of one configuration and the spread `max - min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub feature_set: String,
    pub model: String,
    pub runs: usize,
    pub auc_g: (f64, f64),
    pub auc_w: (f64, f64),
    pub mf_v: (usize, usize),
    pub mf_t: (usize, usize),
    pub pf_t: (usize, usize),
    pub acc: (f64, f64),
}

/// Groups runs by (feature set, model) in first-seen order. "Best" is the
/// maximum for AUC and accuracy and the minimum for fault counts.
pub fn summarize_runs(runs: &[RunResult]) -> Vec<RunSummary> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in runs {
        let k = (r.feature_set.as_str(), r.model.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(fs, m)| {
            let group: Vec<&RunResult> = runs
                .iter()
                .filter(|r| r.feature_set == fs && r.model == m)
                .collect();
            let fmax = |f: fn(&RunResult) -> f64| {
                let v: Vec<f64> = group.iter().map(|r| f(r)).collect();
                let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                (hi, hi - lo)
            };
            let umin = |f: fn(&RunResult) -> usize| {
                let v: Vec<usize> = group.iter().map(|r| f(r)).collect();
                let hi = *v.iter().max().unwrap();
                let lo = *v.iter().min().unwrap();
                (lo, hi - lo)
            };
            RunSummary {
                feature_set: fs.to_string(),
                model: m.to_string(),
                runs: group.len(),
                auc_g: fmax(|r| r.auc_g),
                auc_w: fmax(|r| r.auc_w),
                mf_v: umin(|r| r.mf_v),
                mf_t: umin(|r| r.mf_t),
                pf_t: umin(|r| r.pf_t),
                acc: fmax(|r| r.acc),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn ls(v: &[(f64, Label)]) -> Vec<LabeledScore> {
        v.iter().map(|&(s, l)| LabeledScore::new(s, l)).collect()
    }

    #[test]
    fn auc_examples() {
        let perfect = ls(&[(0.9, Good), (0.8, Good), (0.2, Error), (0.1, Error)]);
        assert_eq!(roc_good(&perfect).unwrap().auc, 1.0);
        let inverted = ls(&[(0.3, Good), (0.7, Error)]);
        assert_eq!(roc_good(&inverted).unwrap().auc, 0.0);
        let half = ls(&[(0.9, Good), (0.5, Good), (0.7, Error)]);
        assert_eq!(roc_good(&half).unwrap().auc, 0.5);
        let tie = ls(&[(0.5, Good), (0.5, Error)]);
        assert_eq!(roc_good(&tie).unwrap().auc, 0.5);
        assert!(roc_good(&ls(&[(0.5, Good)])).is_err());
    }

    #[test]
    fn roc_endpoints() {
        let c = roc_good_warning(&ls(&[(0.9, Good), (0.7, Warning), (0.1, Error)])).unwrap();
        assert_eq!(c.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(c.points.last(), Some(&(1.0, 1.0)));
        assert_eq!(c.auc, 1.0);
    }

    #[test]
    fn hand_traced_thresholds() {
        let val = ls(&[
            (0.9, Good),
            (0.8, Good),
            (0.75, Warning),
            (0.7, Error),
            (0.6, Error),
        ]);
        let th = extract_thresholds(&val).unwrap();
        assert_eq!(th, ThresholdPair { t_e: 0.8, t_w: 0.8 });
        let pred: Vec<Label> = val.iter().map(|s| classify(s.score, &th)).collect();
        // 0.75 < t_e, so the warning-labeled motor is rejected
        assert_eq!(pred, vec![Good, Good, Error, Error, Error]);
        let labels: Vec<Label> = val.iter().map(|s| s.label).collect();
        let m = metrics(&pred, &labels).unwrap();
        assert_eq!((m.mf, m.pf, m.acc), (0, 0, 0.8));
    }

    #[test]
    fn threshold_preconditions_and_ties() {
        assert!(extract_thresholds(&ls(&[(0.5, Good), (0.6, Good)])).is_err());
        assert!(extract_thresholds(&ls(&[(0.5, Error)])).is_err());
        let th = extract_thresholds(&ls(&[(0.5, Good), (0.5, Error)])).unwrap();
        assert_eq!(th.t_e, 0.5);
        assert_eq!(classify(0.5, &th), Good);
    }

    #[test]
    fn classify_boundaries() {
        let th = ThresholdPair { t_e: 0.8, t_w: 0.8 };
        assert_eq!(classify(0.79, &th), Error);
        assert_eq!(classify(0.8, &th), Good);
        let th = ThresholdPair { t_e: 0.7, t_w: 0.8 };
        assert_eq!(classify(0.77, &th), Warning);
        assert!(ThresholdPair::new(0.9, 0.8).is_err());
    }

    #[test]
    fn metric_counts() {
        let labels = [Good, Warning, Error].repeat(3);
        let m = metrics(&[Warning; 9], &labels).unwrap();
        assert_eq!((m.mf, m.pf), (3, 0));
        assert!((m.acc - 1.0 / 3.0).abs() < 1e-15);
        assert!(metrics(&[], &[]).is_err());
        assert!(metrics(&[Good], &[]).is_err());
    }

    #[test]
    fn summary_best_and_spread() {
        let run = |seed, auc_g, mf_v| RunResult {
            feature_set: "palff".into(),
            model: "iforest".into(),
            seed,
            auc_g,
            auc_w: 0.5,
            mf_v,
            mf_t: 0,
            pf_t: 2,
            acc: 0.5,
        };
        let s = summarize_runs(&[run(0, 0.9, 3), run(1, 0.95, 1), run(2, 0.85, 2)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].runs, 3);
        assert_eq!(s[0].auc_g.0, 0.95);
        assert!((s[0].auc_g.1 - 0.1).abs() < 1e-12);
        assert_eq!(s[0].mf_v, (1, 2));
        assert_eq!(s[0].pf_t, (2, 0));
    }
}
