//! Command-line front end for the experiment pipelines.
//!
//! Every subcommand derives its inputs from one configuration (defaults,
//! then `--config`, then flag overrides), and runs are deterministic given
//! the master seed, so staged artifacts written by `prepare`, `train`, and
//! `attack` match what `evaluate` recomputes internally.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use idslab::attacks::save_batch;
use idslab::classical::{save_classifier, ClassifierKind, ALL_KINDS};
use idslab::data::save_dataset;
use idslab::harness::{
    load_config, prepare, read_metrics_csv, render_metrics_csv, run_detect_reject_experiment,
    run_ensemble_experiment, run_transfer_experiment, train_stack, write_report, DataSource,
    ExperimentConfig,
};
use idslab::model::Model;
use idslab::nn::{save_mlp, train_mlp};
use idslab::{Error, Result};

#[derive(Parser)]
#[command(name = "idslab", version, about = "Adversarial-attack lab for ML-based intrusion detection")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Directory artifacts are written to.
    #[arg(long, global = true, value_name = "DIR", default_value = "results")]
    out: PathBuf,

    /// Which experiment `evaluate` runs.
    #[arg(long, global = true, value_enum, default_value_t = Experiment::Transfer)]
    experiment: Experiment,

    /// Use a generated corpus of N records instead of a dataset file.
    #[arg(long, global = true, value_name = "N", num_args = 0..=1, default_missing_value = "2000")]
    fixture: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    /// Black-box transferability of surrogate-crafted records.
    Transfer,
    /// Transferability against a majority-vote ensemble of the detectors.
    Ensemble,
    /// Bare detectors against their rejection-trained variants.
    DetectReject,
}

#[derive(Subcommand)]
enum Command {
    /// Load records, split them per family, and persist the encoded partitions.
    Prepare,
    /// Train the surrogate and the detectors; persist their parameters.
    Train {
        /// Model to train: dnn, svm, dt, lr, rf, lda, or all.
        #[arg(default_value = "all", value_name = "MODEL")]
        model: String,
    },
    /// Craft one adversarial batch per sweep cell and persist them.
    Attack,
    /// Run the selected experiment end to end and write its report.
    Evaluate,
    /// Merge metrics files into one deduplicated table.
    Report {
        /// metrics.csv files to merge.
        #[arg(required = true, value_name = "CSV")]
        inputs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.fixture {
        cfg.data = DataSource::Fixture { n };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_out(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out).map_err(|source| Error::Io {
        path: cli.out.display().to_string(),
        source,
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Prepare => {
            let cfg = effective_config(cli)?;
            let data = prepare(&cfg)?;
            ensure_out(cli)?;
            for (name, part) in [
                ("train_a", &data.train_a),
                ("train_b", &data.train_b),
                ("test", &data.test),
            ] {
                let path = cli.out.join(format!("{name}.txt"));
                save_dataset(&path, part)?;
                println!(
                    "wrote {} ({} records, {} dims)",
                    path.display(),
                    part.n_samples(),
                    part.n_dims()
                );
            }
            Ok(())
        }
        Command::Train { model } => {
            let cfg = effective_config(cli)?;
            let data = prepare(&cfg)?;
            ensure_out(cli)?;
            let save_kind = |kind: ClassifierKind, clf: &idslab::classical::Classifier| {
                let path = cli.out.join(format!("{}.txt", kind.as_str()));
                save_classifier(&path, clf)?;
                println!("wrote {} (fingerprint {})", path.display(), clf.fingerprint());
                Ok::<(), Error>(())
            };
            match model.as_str() {
                "all" => {
                    let stack = train_stack(&cfg, &data, &mut Default::default())?;
                    let path = cli.out.join("dnn.txt");
                    save_mlp(&path, &stack.surrogate)?;
                    println!(
                        "wrote {} (fingerprint {})",
                        path.display(),
                        stack.surrogate.fingerprint()
                    );
                    for (kind, clf) in ALL_KINDS.iter().zip(&stack.victims) {
                        save_kind(*kind, clf)?;
                    }
                }
                "dnn" => {
                    let surrogate = train_mlp(&data.train_a, &cfg.resolved().surrogate)?;
                    let path = cli.out.join("dnn.txt");
                    save_mlp(&path, &surrogate)?;
                    println!(
                        "wrote {} (fingerprint {})",
                        path.display(),
                        surrogate.fingerprint()
                    );
                }
                name => {
                    let kind = ClassifierKind::from_str(name)?;
                    let k = ALL_KINDS.iter().position(|&x| x == kind).unwrap();
                    let clf = idslab::classical::train_classifier(
                        kind,
                        &data.train_b,
                        &cfg.victims,
                        cfg.victim_seed(k),
                    )?;
                    save_kind(kind, &clf)?;
                }
            }
            Ok(())
        }
        Command::Attack => {
            let cfg = effective_config(cli)?;
            let data = prepare(&cfg)?;
            let surrogate = train_mlp(&data.train_a, &cfg.resolved().surrogate)?;
            ensure_out(cli)?;
            for (mi, &method) in cfg.methods.iter().enumerate() {
                for (ei, &epsilon) in cfg.epsilons.iter().enumerate() {
                    let cell = (mi * cfg.epsilons.len() + ei) as u64;
                    let acfg = cfg.attack_config(method, epsilon, cell);
                    let batch = idslab::attacks::craft_batch(&surrogate, &data.test, &acfg)?;
                    let path = cli
                        .out
                        .join(format!("advbatch_{}_{}.txt", method.as_str(), epsilon));
                    save_batch(&path, &batch)?;
                    println!("wrote {} ({} rows)", path.display(), batch.n_samples());
                }
            }
            Ok(())
        }
        Command::Evaluate => {
            let cfg = effective_config(cli)?;
            let report = match cli.experiment {
                Experiment::Transfer => run_transfer_experiment(&cfg)?,
                Experiment::Ensemble => run_ensemble_experiment(&cfg)?,
                Experiment::DetectReject => run_detect_reject_experiment(&cfg)?,
            };
            write_report(&report, &cli.out)?;
            println!(
                "{}: {} metric records over {} models",
                report.experiment,
                report.records.len(),
                report.model_fingerprints.len()
            );
            println!("wrote {}", cli.out.join("metrics.csv").display());
            println!("wrote {}", cli.out.join("report.json").display());
            for method in report.records.iter().map(|r| &r.method).collect::<std::collections::BTreeSet<_>>() {
                println!("wrote {}", cli.out.join(format!("curves_{method}.csv")).display());
            }
            Ok(())
        }
        Command::Report { inputs } => {
            let mut records = Vec::new();
            for path in inputs {
                records.extend(read_metrics_csv(path)?);
            }
            let text = render_metrics_csv(&records)?;
            ensure_out(cli)?;
            let path = cli.out.join("metrics.csv");
            std::fs::write(&path, &text).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            println!("wrote {} ({} records)", path.display(), records.len());
            Ok(())
        }
    }
}
