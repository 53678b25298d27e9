//! Small end-to-end runs of the library pipeline and the command-line tool.

use std::path::Path;
use std::process::Command;

use gearline::dataset::{Manifest, Split};
use gearline::evaluation::Label;
use gearline::features::spectral::{validate_envelope_config, EnvelopeSpectrogramConfig};
use gearline::features::FeatureMatrix;
use gearline::kinematics::{fault_frequency_set, GearTrain, LES_DOMAIN};
use gearline::pipeline::{
    calibrate, evaluate, extract_features, extract_store, load_measurement, predict, record_key,
    train,
    Bundle, FeatureSet, PredictionMode, Report, RunConfig,
};
use gearline::synth::{generate_dataset, synth_motor, DatasetSpec, FaultRecipe, FaultSignature, MotorRecipe};

fn small_config() -> RunConfig {
    RunConfig {
        feature_set: FeatureSet::LesFf,
        dataset: DatasetSpec {
            train_good: 10,
            train_warning: 4,
            validation_good: 4,
            validation_warning: 2,
            validation_error: 4,
            disturbance_good: 1,
            disturbance_error: 1,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn study(dir: &Path, cfg: &RunConfig) -> (Manifest, FeatureMatrix, Bundle, Report) {
    let manifest = generate_dataset(&cfg.dataset, cfg.seed, dir).unwrap();
    let store = extract_store(&manifest, cfg).unwrap();
    let mut bundle = train(&store, &manifest, cfg).unwrap();
    calibrate(&mut bundle, &store, &manifest).unwrap();
    let report = evaluate(&bundle, &store, &manifest, Split::Disturbance).unwrap();
    (manifest, store, bundle, report)
}

fn motor(severity: f64, seed: u64) -> gearline::signal::TimeSignal {
    let target = fault_frequency_set(&GearTrain::reference(), LES_DOMAIN)
        .into_iter()
        .find(|f| f.label == "shaft1_h1")
        .unwrap();
    let recipe = MotorRecipe {
        seed,
        ..Default::default()
    };
    synth_motor(&recipe, &FaultRecipe::new(FaultSignature::Impulsive, target, severity)).unwrap()
}

#[test]
fn library_pipeline() {
    let cfg = small_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (manifest, store, bundle, report) = study(a.path(), &cfg);
    let (_, _, bundle2, report2) = study(b.path(), &cfg);

    // Determinism of the bundle and of both reports.
    assert_eq!(bundle.to_bytes(), bundle2.to_bytes());
    assert_eq!(report.to_csv(), report2.to_csv());
    assert_eq!(report.breakdown_csv(), report2.breakdown_csv());

    assert_eq!(store.n_cols(), 32);
    assert_eq!(bundle.models.len(), 5);
    assert!(bundle.models.iter().all(|m| m.thresholds.unwrap().t_e <= m.thresholds.unwrap().t_w));
    assert_eq!(report.breakdown.len(), 7);
    assert_eq!(report.runs().count(), 5);
    assert!(report.rows.iter().all(|r| r.result.feature_set == "les_ff"));

    // Validation and disturbance rows never reach the fit.
    let poisoned_rows: Vec<Vec<f64>> = store
        .rows()
        .iter()
        .zip(store.row_names())
        .map(|(row, name)| {
            let split = manifest
                .records
                .iter()
                .find(|r| record_key(&r.path) == *name)
                .map(|r| r.split)
                .unwrap();
            if split == Split::Train {
                row.clone()
            } else {
                row.iter().map(|v| v * 1e3 + 7.0).collect()
            }
        })
        .collect();
    let poisoned = FeatureMatrix::new(
        store.row_names().to_vec(),
        store.col_names().to_vec(),
        poisoned_rows,
    )
    .unwrap();
    assert_ne!(poisoned, store);
    let clean = train(&store, &manifest, &cfg).unwrap();
    let dirty = train(&poisoned, &manifest, &cfg).unwrap();
    assert_eq!(clean.to_bytes(), dirty.to_bytes());

    // Config hash.
    let other = RunConfig {
        seed: cfg.seed + 1,
        ..cfg.clone()
    };
    assert!(bundle.check_config(&cfg).is_ok());
    assert!(bundle.check_config(&other).is_err());
    let path = a.path().join("model.bundle");
    bundle.save(&path).unwrap();
    assert_eq!(Bundle::load(&path).unwrap(), bundle);

    // Prediction.
    let healthy = predict(&bundle, &motor(0.0, 901), PredictionMode::Selected).unwrap();
    assert_eq!(healthy.verdict, Label::Good, "{healthy:?}");
    let faulty = predict(&bundle, &motor(1.0, 902), PredictionMode::Selected).unwrap();
    assert_eq!(faulty.verdict, Label::Error, "{faulty:?}");
    let voted = predict(&bundle, &motor(1.0, 902), PredictionMode::Majority).unwrap();
    assert_eq!(voted.votes.len(), 5);
    assert_eq!(voted.verdict, Label::Error);
    assert!(predict(&clean, &motor(0.0, 901), PredictionMode::Selected).is_err());
    assert!(evaluate(&clean, &store, &manifest, Split::Validation).is_err());
}

#[test]
fn calibration_needs_validation_errors() {
    let mut cfg = small_config();
    cfg.dataset.validation_error = 0;
    cfg.dataset.disturbance_error = 0;
    // The generator itself refuses such a study.
    let dir = tempfile::tempdir().unwrap();
    assert!(generate_dataset(&cfg.dataset, 0, dir.path()).is_err());

    let cfg = small_config();
    let manifest = generate_dataset(&cfg.dataset, 0, dir.path()).unwrap();
    let store = extract_store(&manifest, &cfg).unwrap();
    let mut bundle = train(&store, &manifest, &cfg).unwrap();
    let no_errors = Manifest::new(
        manifest
            .records
            .iter()
            .filter(|r| !(r.split == Split::Validation && r.label == Label::Error))
            .cloned()
            .collect(),
        dir.path(),
    )
    .unwrap();
    assert!(calibrate(&mut bundle, &store, &no_errors).is_err());
    assert!(!bundle.is_calibrated());
}

#[test]
fn lenient_48k_records() {
    let mut cfg = small_config();
    cfg.dataset.base.sample_rate_hz = 48_000.0;
    cfg.dataset.base.duration_s = 5.24;
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(&cfg.dataset, cfg.seed, dir.path()).unwrap();
    let wav = manifest.resolve(&manifest.records[0]);

    assert!(extract_store(&manifest, &cfg).is_err());
    assert!(load_measurement(&wav, true).is_err());
    let signal = load_measurement(&wav, false).unwrap();
    assert_eq!(signal.sample_rate_hz(), 48_000.0);

    let geom = validate_envelope_config(
        &cfg.gear_train,
        &EnvelopeSpectrogramConfig::default(),
        signal.len(),
        48_000.0,
    )
    .unwrap();
    assert_eq!(geom.framing.window, 422);
    for fs in FeatureSet::ALL {
        let c = RunConfig {
            feature_set: fs,
            strict_io: false,
            ..cfg.clone()
        };
        let v = extract_features(&signal, &c).unwrap();
        assert!(!v.is_empty() && v.values().iter().all(|x| x.is_finite()), "{fs}");
    }

    cfg.strict_io = false;
    let store = extract_store(&manifest, &cfg).unwrap();
    let mut bundle = train(&store, &manifest, &cfg).unwrap();
    calibrate(&mut bundle, &store, &manifest).unwrap();
    let report = evaluate(&bundle, &store, &manifest, Split::Validation).unwrap();
    assert!(report.selected().result.auc_g > 0.5);

    let eight = gearline::signal::TimeSignal::new(vec![0.0; 8_000 * 5], 8_000.0).unwrap();
    let p = dir.path().join("eight.wav");
    gearline::dataset::write_wav(&p, &eight).unwrap();
    assert!(load_measurement(&p, false).is_err());
}

fn gearline(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gearline"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = gearline(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn command_line_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let config = p("config.json");
    std::fs::write(&config, serde_json::to_string_pretty(&small_config()).unwrap()).unwrap();

    ok(&["synth", "--config", &config, "--out", &p("data")]);
    let manifest = p("data/manifest.json");
    ok(&["extract", "--config", &config, "--manifest", &manifest, "--out", &p("store/les_ff.csv")]);
    let header = std::fs::read_to_string(p("store/les_ff.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 33);

    ok(&[
        "train", "--config", &config, "--manifest", &manifest, "--features", &p("store/les_ff.csv"),
        "--out", &p("model.bundle"),
    ]);
    let uncalibrated = std::fs::read(p("model.bundle")).unwrap();
    ok(&[
        "calibrate", "--config", &config, "--manifest", &manifest, "--features",
        &p("store/les_ff.csv"), "--bundle", &p("model.bundle"), "--out", &p("calibrated.bundle"),
    ]);
    assert_eq!(std::fs::read(p("model.bundle")).unwrap(), uncalibrated);

    ok(&[
        "evaluate", "--manifest", &manifest, "--features", &p("store/les_ff.csv"), "--bundle",
        &p("calibrated.bundle"), "--out", &p("report"),
    ]);
    let report = std::fs::read_to_string(p("report/report.csv")).unwrap();
    assert!(report.starts_with("row,feature_set,model,seed,nu,AUC_g,AUC_w,MF_v,MF_t,PF_t,Acc\n"));
    let breakdown = std::fs::read_to_string(p("report/breakdown.csv")).unwrap();
    assert_eq!(breakdown.lines().count(), 8);

    let healthy = p("healthy.wav");
    gearline::dataset::write_wav(Path::new(&healthy), &motor(0.0, 901)).unwrap();
    let out = ok(&["predict", "--bundle", &p("calibrated.bundle"), "--wav", &healthy, "--out", &p("verdict.json")]);
    assert!(out.starts_with("good "), "{out}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p("verdict.json")).unwrap()).unwrap();
    assert_eq!(json["verdict"], "good");
    let out = ok(&["predict", "--bundle", &p("calibrated.bundle"), "--wav", &healthy, "--majority"]);
    assert!(out.starts_with("good"), "{out}");

    // Failures exit non-zero with a message.
    let fail = |args: &[&str]| {
        let out = gearline(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    };
    fail(&["predict", "--bundle", &p("model.bundle"), "--wav", &healthy]);
    fail(&["predict", "--bundle", &p("calibrated.bundle"), "--wav", &healthy, "--seed", "42"]);
    fail(&[
        "evaluate", "--manifest", &manifest, "--features", &p("store/les_ff.csv"), "--bundle",
        &p("model.bundle"), "--out", &p("report2"),
    ]);
    fail(&["extract", "--manifest", &p("missing/manifest.json"), "--out", &p("x.csv")]);
    fail(&["synth", "--config", &p("missing.json"), "--out", &p("data2")]);
}
