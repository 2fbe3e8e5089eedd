use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fogshield::cli;

/// Fog-assisted WSN simulator with DoS attack injection and detection.
#[derive(Parser)]
#[command(name = "fogshield", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a network run and write the trace CSV plus summary sidecars.
    Simulate {
        /// Run configuration file (key=value lines).
        #[arg(short, long)]
        config: PathBuf,
        /// Output trace CSV; `.summary.csv` and `.energy.csv` land next to it.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Extract the labeled dataset from a trace and split it.
    Dataset {
        /// Input trace CSV written by `simulate`.
        #[arg(short, long)]
        trace: PathBuf,
        /// Output dataset CSV; `.train.csv` and `.test.csv` land next to it.
        #[arg(short, long)]
        out: PathBuf,
        /// Fraction of records kept for training.
        #[arg(long, default_value_t = 0.8)]
        train_ratio: f64,
        /// Split shuffle seed (FOGSHIELD_SEED overrides it).
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Cross-validate, train, and evaluate one model on dataset CSVs.
    TrainEval {
        /// Training dataset CSV.
        #[arg(long)]
        train: PathBuf,
        /// Held-out test dataset CSV.
        #[arg(long)]
        test: PathBuf,
        /// Model to train: tree, logistic, gbt, or svm.
        #[arg(short, long)]
        model: String,
        /// Feature mode: all, pca10, svd10, or multi20.
        #[arg(short, long, default_value = "all")]
        features: String,
        /// Cross-validation fold count (defaults to the config's k_folds).
        #[arg(short, long)]
        k: Option<usize>,
        /// Optional config file supplying hyperparameters and seeds.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Explicit feature list (one name per line) instead of a mode.
        #[arg(long)]
        feature_file: Option<PathBuf>,
        /// Allow label-restating columns (N_n, C_n, I_fn) as features.
        #[arg(long, default_value_t = false)]
        allow_leaky: bool,
        /// Directory for reports, the confusion matrix, ROC files, and the model.
        #[arg(long, default_value = "eval-out")]
        out_dir: PathBuf,
    },
    /// Merge traces, run summaries, or evaluation reports into one table.
    Report {
        /// Input files of one kind: trace/energy CSVs, summary CSVs, or report CSVs.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output CSV path; prints to stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run simulate, dataset, and train-eval end to end with one seed.
    Pipeline {
        /// Run configuration file (key=value lines).
        #[arg(short, long)]
        config: PathBuf,
        /// Directory receiving every pipeline artifact.
        #[arg(long, default_value = "pipeline-out")]
        out_dir: PathBuf,
        /// Model to train: tree, logistic, gbt, or svm.
        #[arg(short, long, default_value = "gbt")]
        model: String,
        /// Feature mode: all, pca10, svd10, or multi20.
        #[arg(short, long, default_value = "multi20")]
        features: String,
    },
}

fn run(args: Args) -> fogshield::Result<()> {
    match args.command {
        Command::Simulate { config, out } => cli::cmd_simulate(&config, &out),
        Command::Dataset {
            trace,
            out,
            train_ratio,
            seed,
        } => cli::cmd_dataset(&trace, &out, train_ratio, seed),
        Command::TrainEval {
            train,
            test,
            model,
            features,
            k,
            config,
            feature_file,
            allow_leaky,
            out_dir,
        } => cli::cmd_train_eval(&cli::TrainEvalArgs {
            train_csv: train,
            test_csv: test,
            model,
            features,
            k_folds: k,
            allow_leaky,
            feature_file,
            out_dir,
            config,
        }),
        Command::Report { inputs, out } => cli::cmd_report(&inputs, out.as_deref()),
        Command::Pipeline {
            config,
            out_dir,
            model,
            features,
        } => cli::cmd_pipeline(&config, &out_dir, &model, &features),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fogshield: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
