use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gearline::dataset::{Manifest, Split};
use gearline::pipeline::{
    calibrate, evaluate, extract_store, load_measurement, predict, read_feature_csv, train,
    write_feature_csv, Bundle, PredictionMode, RunConfig,
};
use gearline::synth::generate_dataset;
use gearline::{Error, Result};

#[derive(Parser)]
#[command(name = "gearline", version, about = "Acoustic end-of-line anomaly detection for geared motors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON); defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Require 50 kHz, 2^18-sample records (`--strict-io false` relaxes this).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    strict_io: Option<bool>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset and its manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Output directory; the manifest is written to `<out>/manifest.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the configured feature set for every manifest record.
    Extract {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        /// Feature store CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the preprocessor and the models on the training split.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Bundle file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Set thresholds and select a model on the validation split.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Calibrated bundle; defaults to overwriting `--bundle`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the study report and the per-condition breakdown.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Split scored for MF_t, PF_t and Acc.
        #[arg(long, default_value = "disturbance")]
        split: String,
        /// Output directory for `report.csv` and `breakdown.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify one record.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        wav: PathBuf,
        /// Majority vote over all runs instead of the selected model.
        #[arg(long)]
        majority: bool,
        /// Optional JSON output file; the verdict is always printed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.strict_io {
            cfg.strict_io = s;
        }
    }

    /// Loads a bundle and checks it against `--config`/`--seed` when given.
    fn bundle(&self, path: &Path) -> Result<Bundle> {
        let bundle = Bundle::load(path)?;
        if self.config.is_some() || self.seed.is_some() {
            let mut cfg = match &self.config {
                Some(p) => RunConfig::load(p)?,
                None => bundle.config.clone(),
            };
            self.apply(&mut cfg);
            bundle.check_config(&cfg)?;
        }
        Ok(bundle)
    }

    fn strict(&self, bundle: &Bundle) -> bool {
        self.strict_io.unwrap_or(bundle.config.strict_io)
    }
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "validation" => Ok(Split::Validation),
        "disturbance" => Ok(Split::Disturbance),
        _ => Err(Error::InvalidParameter(format!("unknown split `{s}`"))),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common, out } => {
            let cfg = common.config()?;
            let manifest = generate_dataset(&cfg.dataset, cfg.seed, &out)?;
            println!(
                "wrote {} records to {}",
                manifest.records.len(),
                out.join("manifest.json").display()
            );
        }
        Command::Extract {
            common,
            manifest,
            out,
        } => {
            let cfg = common.config()?;
            let manifest = Manifest::load(&manifest)?;
            let store = extract_store(&manifest, &cfg)?;
            write_feature_csv(&out, &store)?;
            println!(
                "wrote {} x {} {} features to {}",
                store.n_rows(),
                store.n_cols(),
                cfg.feature_set,
                out.display()
            );
        }
        Command::Train {
            common,
            manifest,
            features,
            out,
        } => {
            let cfg = common.config()?;
            let manifest = Manifest::load(&manifest)?;
            let store = read_feature_csv(&features)?;
            let bundle = train(&store, &manifest, &cfg)?;
            bundle.save(&out)?;
            println!("trained {} {} models, bundle {}", bundle.models.len(), cfg.model, out.display());
        }
        Command::Calibrate {
            common,
            manifest,
            features,
            bundle,
            out,
        } => {
            let mut b = common.bundle(&bundle)?;
            let manifest = Manifest::load(&manifest)?;
            let store = read_feature_csv(&features)?;
            calibrate(&mut b, &store, &manifest)?;
            let sel = b.selected.expect("calibrated");
            let m = &b.models[sel];
            let th = m.thresholds.expect("calibrated");
            let v = m.validation.expect("calibrated");
            let out = out.unwrap_or(bundle);
            b.save(&out)?;
            println!(
                "selected run {sel} (seed {}, nu {}): t_e {} t_w {} AUC_g {:.6} MF_v {}",
                m.seed, m.nu, th.t_e, th.t_w, v.auc_g, v.mf_v
            );
        }
        Command::Evaluate {
            common,
            manifest,
            features,
            bundle,
            split,
            out,
        } => {
            let b = common.bundle(&bundle)?;
            let manifest = Manifest::load(&manifest)?;
            let store = read_feature_csv(&features)?;
            let report = evaluate(&b, &store, &manifest, parse_split(&split)?)?;
            write(&out.join("report.csv"), &report.to_csv())?;
            write(&out.join("breakdown.csv"), &report.breakdown_csv())?;
            print!("{}", report.to_csv());
        }
        Command::Predict {
            common,
            bundle,
            wav,
            majority,
            out,
        } => {
            let b = common.bundle(&bundle)?;
            let signal = load_measurement(&wav, common.strict(&b))?;
            let mode = if majority {
                PredictionMode::Majority
            } else {
                b.config.prediction
            };
            let p = predict(&b, &signal, mode)?;
            let json = serde_json::to_string_pretty(&p)?;
            if let Some(out) = out {
                write(&out, &format!("{json}\n"))?;
            }
            match p.score {
                Some(s) => println!("{} {s}", p.verdict),
                None => println!("{}", p.verdict),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
