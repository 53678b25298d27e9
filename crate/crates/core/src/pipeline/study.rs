//! Training, calibration, evaluation and prediction over a feature store.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Manifest, NoiseTag, Record, Split};
use crate::error::{Error, Result};
use crate::evaluation::{
    classify, extract_thresholds, metrics, roc_good, roc_good_warning, summarize_runs, Label,
    LabeledScore, RunResult,
};
use crate::features::FeatureMatrix;
use crate::occ::{fit, OccConfig};
use crate::pipeline::{
    extract_features, record_key, Bundle, PreprocessorKind, RunConfig, TrainedModel,
    ValidationSummary,
};
use crate::preprocess::{fit_pca, fit_robust_scaler, Preprocessor};
use crate::signal::TimeSignal;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// Verdict of the model chosen at calibration.
    #[default]
    Selected,
    /// Majority vote of all runs; ties resolve to the worse verdict.
    Majority,
}

/// Store rows of the records of one split, in manifest order.
fn split_rows<'m>(
    store: &FeatureMatrix,
    manifest: &'m Manifest,
    split: Split,
) -> Result<(FeatureMatrix, Vec<&'m Record>)> {
    let index: HashMap<&str, usize> = store
        .row_names()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let records = manifest.split(split);
    let idx = records
        .iter()
        .map(|r| {
            let key = record_key(&r.path);
            index.get(key.as_str()).copied().ok_or_else(|| {
                Error::Manifest(format!("record `{key}` is missing from the feature store"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((store.select_rows(&idx), records))
}

fn check_columns(bundle: &Bundle, store: &FeatureMatrix) -> Result<()> {
    if store.col_names() != bundle.feature_names.as_slice() {
        return Err(Error::Bundle(
            "feature store columns do not match the bundle".into(),
        ));
    }
    Ok(())
}

/// Fits the preprocessor and one model per run on the training split only.
pub fn train(store: &FeatureMatrix, manifest: &Manifest, cfg: &RunConfig) -> Result<Bundle> {
    cfg.validate()?;
    let (x, records) = split_rows(store, manifest, Split::Train)?;
    if records.is_empty() {
        return Err(Error::Manifest("the training split is empty".into()));
    }
    let preprocessor = match cfg.preprocessor_kind() {
        PreprocessorKind::None => Preprocessor::Identity { dim: x.n_cols() },
        PreprocessorKind::Scaler => Preprocessor::RobustScaler(fit_robust_scaler(&x)?),
        PreprocessorKind::Pca => Preprocessor::Pca(fit_pca(&x, cfg.pca_variance)?),
    };
    let xt = preprocessor.apply_rows(&x)?;
    let models = cfg
        .run_plan()
        .into_par_iter()
        .map(|(seed, nu)| {
            let occ = OccConfig {
                seed,
                contamination_nu: nu,
                ..cfg.occ.clone()
            };
            Ok(TrainedModel {
                seed,
                nu,
                model: fit(cfg.model, &xt, &occ)?,
                thresholds: None,
                validation: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Bundle {
        config_hash: cfg.model_hash(),
        config: cfg.clone(),
        feature_names: store.col_names().to_vec(),
        preprocessor,
        models,
        selected: None,
    })
}

/// Scores of every model on every row.
fn score_matrix(bundle: &Bundle, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
    let xt = bundle.preprocessor.apply_rows(x)?;
    bundle
        .models
        .par_iter()
        .map(|m| m.model.score_rows(&xt))
        .collect()
}

fn labeled(scores: &[f64], records: &[&Record]) -> Vec<LabeledScore> {
    scores
        .iter()
        .zip(records)
        .map(|(&s, r)| LabeledScore {
            score: s,
            label: r.label,
            noise_tag: Some(r.noise.to_string()),
        })
        .collect()
}

/// Sets thresholds from the validation split and selects the model with
/// the fewest missed faults, then the highest good-vs-rest AUC.
pub fn calibrate(bundle: &mut Bundle, store: &FeatureMatrix, manifest: &Manifest) -> Result<()> {
    check_columns(bundle, store)?;
    let (x, records) = split_rows(store, manifest, Split::Validation)?;
    let scores = score_matrix(bundle, &x)?;
    for (m, s) in bundle.models.iter_mut().zip(&scores) {
        let val = labeled(s, &records);
        let th = extract_thresholds(&val)?;
        let mf_v = val
            .iter()
            .filter(|v| v.label == Label::Error && classify(v.score, &th) != Label::Error)
            .count();
        m.thresholds = Some(th);
        m.validation = Some(ValidationSummary {
            auc_g: roc_good(&val)?.auc,
            auc_w: roc_good_warning(&val)?.auc,
            mf_v,
        });
    }
    let mut best = 0;
    for i in 1..bundle.models.len() {
        let (a, b) = (
            bundle.models[i].validation.expect("calibrated"),
            bundle.models[best].validation.expect("calibrated"),
        );
        if a.mf_v < b.mf_v || (a.mf_v == b.mf_v && a.auc_g > b.auc_g) {
            best = i;
        }
    }
    bundle.selected = Some(best);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Run,
    Best,
    Delta,
    Selected,
}

impl RowKind {
    fn as_str(&self) -> &'static str {
        match self {
            RowKind::Run => "run",
            RowKind::Best => "best",
            RowKind::Delta => "delta",
            RowKind::Selected => "selected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: RowKind,
    /// Run seed and contamination; absent on aggregate rows.
    pub seed: Option<u64>,
    pub nu: Option<f64>,
    pub result: RunResult,
}

/// Per-condition outcome of the selected model on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub noise: NoiseTag,
    pub n: usize,
    /// `confusion[label][prediction]`, both in good, warning, error order.
    pub confusion: [[usize; 3]; 3],
    pub pf: usize,
    pub mf: usize,
    pub acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub breakdown: Vec<BreakdownRow>,
}

fn label_index(l: Label) -> usize {
    match l {
        Label::Good => 0,
        Label::Warning => 1,
        Label::Error => 2,
    }
}

/// Validation figures come from calibration; MF_t, PF_t and Acc from
/// `test_split`.
pub fn evaluate(
    bundle: &Bundle,
    store: &FeatureMatrix,
    manifest: &Manifest,
    test_split: Split,
) -> Result<Report> {
    check_columns(bundle, store)?;
    let selected = bundle
        .selected
        .filter(|_| bundle.is_calibrated())
        .ok_or_else(|| Error::Bundle("bundle is not calibrated".into()))?;
    let (x, records) = split_rows(store, manifest, test_split)?;
    if records.is_empty() {
        return Err(Error::Manifest(format!("the {} split is empty", test_split.as_str())));
    }
    let labels: Vec<Label> = records.iter().map(|r| r.label).collect();
    let scores = score_matrix(bundle, &x)?;
    let cfg = &bundle.config;
    let mut rows = Vec::new();
    let mut predictions = Vec::new();
    for (m, s) in bundle.models.iter().zip(&scores) {
        let th = m.thresholds.expect("calibrated");
        let v = m.validation.expect("calibrated");
        let pred: Vec<Label> = s.iter().map(|&x| classify(x, &th)).collect();
        let t = metrics(&pred, &labels)?;
        rows.push(ReportRow {
            kind: RowKind::Run,
            seed: Some(m.seed),
            nu: Some(m.nu),
            result: RunResult {
                feature_set: cfg.feature_set.to_string(),
                model: cfg.model.to_string(),
                seed: m.seed,
                auc_g: v.auc_g,
                auc_w: v.auc_w,
                mf_v: v.mf_v,
                mf_t: t.mf,
                pf_t: t.pf,
                acc: t.acc,
            },
        });
        predictions.push(pred);
    }
    let runs: Vec<RunResult> = rows.iter().map(|r| r.result.clone()).collect();
    for s in summarize_runs(&runs) {
        for (kind, pick) in [(RowKind::Best, 0), (RowKind::Delta, 1)] {
            let f = |p: (f64, f64)| if pick == 0 { p.0 } else { p.1 };
            let u = |p: (usize, usize)| if pick == 0 { p.0 } else { p.1 };
            rows.push(ReportRow {
                kind,
                seed: None,
                nu: None,
                result: RunResult {
                    feature_set: s.feature_set.clone(),
                    model: s.model.clone(),
                    seed: 0,
                    auc_g: f(s.auc_g),
                    auc_w: f(s.auc_w),
                    mf_v: u(s.mf_v),
                    mf_t: u(s.mf_t),
                    pf_t: u(s.pf_t),
                    acc: f(s.acc),
                },
            });
        }
    }
    let mut sel = rows[selected].clone();
    sel.kind = RowKind::Selected;
    rows.push(sel);

    let mut groups: BTreeMap<NoiseTag, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(r.noise).or_default().push(i);
    }
    let pred = &predictions[selected];
    let breakdown = groups
        .into_iter()
        .map(|(noise, idx)| {
            let mut confusion = [[0; 3]; 3];
            for &i in &idx {
                confusion[label_index(labels[i])][label_index(pred[i])] += 1;
            }
            let p: Vec<Label> = idx.iter().map(|&i| pred[i]).collect();
            let l: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
            let m = metrics(&p, &l)?;
            Ok(BreakdownRow {
                noise,
                n: idx.len(),
                confusion,
                pf: m.pf,
                mf: m.mf,
                acc: m.acc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { rows, breakdown })
}

impl Report {
    pub fn selected(&self) -> &ReportRow {
        self.rows
            .iter()
            .find(|r| r.kind == RowKind::Selected)
            .expect("report has a selected row")
    }

    pub fn runs(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.kind == RowKind::Run)
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("row,feature_set,model,seed,nu,AUC_g,AUC_w,MF_v,MF_t,PF_t,Acc\n");
        for r in &self.rows {
            let x = &r.result;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{},{},{},{:.6}",
                r.kind.as_str(),
                x.feature_set,
                x.model,
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                r.nu.map(|n| n.to_string()).unwrap_or_default(),
                x.auc_g,
                x.auc_w,
                x.mf_v,
                x.mf_t,
                x.pf_t,
                x.acc
            );
        }
        out
    }

    pub fn breakdown_csv(&self) -> String {
        let mut out = String::from("noise,n");
        for l in Label::ALL {
            for p in Label::ALL {
                let _ = write!(out, ",{l}_as_{p}");
            }
        }
        out.push_str(",PF,MF,Acc\n");
        for b in &self.breakdown {
            let _ = write!(out, "{},{}", b.noise, b.n);
            for row in &b.confusion {
                for c in row {
                    let _ = write!(out, ",{c}");
                }
            }
            let _ = writeln!(out, ",{},{},{:.6}", b.pf, b.mf, b.acc);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub verdict: Label,
    /// Score of the selected model; absent in majority mode.
    pub score: Option<f64>,
    /// Verdict of every run, in bundle order.
    pub votes: Vec<Label>,
}

/// Classifies one record with a calibrated bundle.
pub fn predict(bundle: &Bundle, signal: &TimeSignal, mode: PredictionMode) -> Result<Prediction> {
    let selected = bundle
        .selected
        .filter(|_| bundle.is_calibrated())
        .ok_or_else(|| Error::Bundle("bundle is not calibrated".into()))?;
    let fv = extract_features(signal, &bundle.config)?;
    if fv.names() != bundle.feature_names.as_slice() {
        return Err(Error::Bundle(
            "extracted features do not match the bundle".into(),
        ));
    }
    let x = bundle.preprocessor.apply(fv.values())?;
    let scores = bundle
        .models
        .iter()
        .map(|m| m.model.score(&x))
        .collect::<Result<Vec<_>>>()?;
    let votes: Vec<Label> = bundle
        .models
        .iter()
        .zip(&scores)
        .map(|(m, &s)| classify(s, &m.thresholds.expect("calibrated")))
        .collect();
    Ok(match mode {
        PredictionMode::Selected => Prediction {
            verdict: votes[selected],
            score: Some(scores[selected]),
            votes,
        },
        PredictionMode::Majority => Prediction {
            verdict: majority(&votes),
            score: None,
            votes,
        },
    })
}

/// Most frequent verdict; ties go to the worse one.
pub(crate) fn majority(votes: &[Label]) -> Label {
    let mut counts = [0usize; 3];
    for &v in votes {
        counts[label_index(v)] += 1;
    }
    let mut best = Label::Good;
    for l in Label::ALL {
        if counts[label_index(l)] >= counts[label_index(best)] {
            best = l;
        }
    }
    best
}
