//! `hdnids`: train, evaluate and stress hyperdimensional intrusion
//! classifiers from the command line.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error,
//! 3 internal invariant violation.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod reports;

use config::{LabelMode, RunConfig, Source, OUTPUT_DIR_ENV};
use error::CliError;
use hdnids_core::regen::ReencodeMode;

#[derive(Debug, Parser)]
#[command(name = "hdnids", version, about = "Hyperdimensional intrusion detection with dimension regeneration")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write checkpoints and reports.
    Train(RunArgs),
    /// Score a trained model on a CSV file.
    Eval(EvalArgs),
    /// Train dynamic(D), static(D) and static(large D) on the same split.
    Compare(RunArgs),
    /// Accuracy of a trained model at every configured bitwidth.
    Bitwidth(SweepArgs),
    /// Accuracy under random bit flips in the stored model.
    Faults(SweepArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (also settable through HDNIDS_OUTPUT_DIR).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// CSV training data (selects the csv source).
    #[arg(long, conflicts_with_all = ["synth", "intrusion"])]
    pub data: Option<PathBuf>,
    /// Separate CSV test file.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// Use Gaussian synthetic data.
    #[arg(long, conflicts_with = "intrusion")]
    pub synth: bool,
    /// Use the synthetic connection-record generator.
    #[arg(long)]
    pub intrusion: bool,
    #[arg(long)]
    pub label_column: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub drop_columns: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub labels: Option<LabelMode>,
    #[arg(long)]
    pub label_map: Option<PathBuf>,
    /// Compute normalization statistics on the training split only.
    #[arg(long)]
    pub schema_from_train: bool,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub train_subsample: Option<usize>,
    #[arg(long)]
    pub records: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,

    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Fraction of dimensions regenerated per cycle.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long)]
    pub epochs_per_cycle: Option<usize>,
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    #[arg(long)]
    pub plateau_stop: bool,
    #[arg(long, value_enum)]
    pub reencode: Option<ReencodeArg>,
    /// Width of the large static model in `compare`.
    #[arg(long)]
    pub large_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ReencodeArg {
    Partial,
    Full,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `train`; supplies defaults for the paths below.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub encoder: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Defaults to `test.csv` in the model directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub label_column: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub drop_columns: Vec<usize>,
    #[arg(long, value_enum, default_value = "raw")]
    pub labels: LabelMode,
    #[arg(long)]
    pub label_map: Option<PathBuf>,
    /// Evaluate the model quantized to this many bits.
    #[arg(long)]
    pub bitwidth: Option<u32>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub model_dir: PathBuf,
    /// Defaults to the snapshot in the model directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub bitwidths: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "intrusion")]
    pub kind: SynthKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Records (intrusion) or records per class (gaussian).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub n_features: Option<usize>,
    #[arg(long)]
    pub n_classes: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SynthKind {
    Gaussian,
    Intrusion,
}

impl RunArgs {
    /// Config file (or defaults), then environment, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = dir.into();
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        let d = &mut cfg.data;
        if let Some(p) = &self.data {
            d.source = Source::Csv;
            d.path = Some(p.clone());
        }
        if self.synth {
            d.source = Source::Gaussian;
        }
        if self.intrusion {
            d.source = Source::Intrusion;
        }
        set(&mut d.test_path, self.test_data.clone().map(Some));
        set(&mut d.label_column, self.label_column.map(Some));
        set(&mut d.drop_columns, self.drop_columns.clone());
        set(&mut d.labels, self.labels);
        set(&mut d.label_map, self.label_map.clone().map(Some));
        d.schema_from_train |= self.schema_from_train;
        set(&mut d.test_fraction, self.test_fraction);
        set(&mut d.split_seed, self.split_seed);
        set(&mut d.train_subsample, self.train_subsample.map(Some));
        set(&mut d.intrusion.records, self.records);
        set(&mut d.intrusion.noise, self.noise);
        set(&mut cfg.encoder.dim, self.dim);
        set(&mut cfg.encoder.sigma, self.sigma);
        set(&mut cfg.encoder.seed, self.seed);
        set(&mut cfg.train.eta, self.eta);
        let s = &mut cfg.schedule;
        set(&mut s.regen_rate, self.rate);
        set(&mut s.cycles, self.cycles);
        set(&mut s.epochs_per_cycle, self.epochs_per_cycle);
        set(&mut s.warmup_epochs, self.warmup_epochs);
        s.plateau_stop |= self.plateau_stop;
        set(
            &mut s.reencode,
            self.reencode.map(|r| match r {
                ReencodeArg::Partial => ReencodeMode::Partial,
                ReencodeArg::Full => ReencodeMode::Full,
            }),
        );
        set(&mut cfg.compare.large_dim, self.large_dim.map(Some));
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invariant(e.to_string()))?;
    }
    match cli.command {
        Command::Train(args) => commands::train(&args.resolve()?),
        Command::Compare(args) => commands::compare(&args.resolve()?),
        Command::Eval(args) => commands::eval(&args),
        Command::Bitwidth(args) => commands::bitwidth(&args),
        Command::Faults(args) => commands::faults(&args),
        Command::Synth(args) => commands::synth(&args),
    }
}

/// Parse `args`, run the command, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hdnids: {e}");
            e.exit_code()
        }
    }
}
