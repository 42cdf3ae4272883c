//! `serkit`: speech emotion recognition pipeline on the command line.

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "serkit", version, about = "Speech emotion recognition toolkit")]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract frame-level features from the audio listed in a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML with `kinds`, `[frontend]` and `[gabor]` tables.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated feature families, e.g. `gbfb,sgbfb,mfcc`.
        #[arg(long)]
        features: Option<String>,
    },
    /// Collapse a frame-level table into utterance-level functionals.
    Functionals {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "mean,std,skew,kurt")]
        set: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select features by mRMR or CFS.
    Select {
        #[arg(long, default_value = "mrmr")]
        method: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the selected indices and scores.
        #[arg(long)]
        indices: Option<PathBuf>,
        /// Reuse indices from an earlier run instead of selecting.
        #[arg(long = "use", conflicts_with = "k")]
        reuse: Option<PathBuf>,
    },
    /// Learn a projection matrix with pQPSO and project the features.
    Reduce {
        #[arg(long, default_value = "pqpso")]
        method: String,
        #[arg(long)]
        dout: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the learned projection.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Convergence trace CSV (iteration, best_cost, alpha, mt).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Apply an existing projection instead of learning one.
        #[arg(long, conflicts_with = "dout")]
        apply: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        validation_fraction: f64,
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Train an ELM or hierarchical ELM classifier.
    Train {
        #[arg(long, default_value = "proposed")]
        scheme: String,
        /// `helm` or `elm`.
        #[arg(long, default_value = "helm")]
        kind: String,
        /// TOML with the classifier hyperparameters.
        #[arg(long)]
        cfg: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Predict classes with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a leave-one-speaker-out experiment.
    Loso {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; defaults to `runs/<config name>` next to the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic feature table.
    Synth {
        #[arg(long, default_value = "imbalanced10to1")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth.
    Metrics {
        /// CSV with a `truth` or `label` column.
        #[arg(long)]
        truth: PathBuf,
        /// CSV with a `pred` or `label` column.
        #[arg(long)]
        pred: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = commands::run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
