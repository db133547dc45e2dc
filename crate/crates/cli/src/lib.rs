//! `iqpgraph` command line: gen-data, train, sample, eval, hpo, reproduce.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod config;
pub mod pipeline;
pub mod reproduce;

use config::{ClassArg, FamilyArg, FileConfig, TrainSection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Bad flags or config values; maps to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "iqpgraph", version, about = "IQP-circuit Born machines for random graphs")]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON config file; flags take precedence over it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an ER or bipartite dataset
    GenData(GenDataArgs),
    /// Train a shallow IQP circuit on a dataset
    Train(TrainArgs),
    /// Sample graphs from a trained circuit
    Sample(SampleArgs),
    /// Score samples against a reference dataset
    Eval(EvalArgs),
    /// Random search with repeated k-fold CV, then family-rule selection
    Hpo(HpoArgs),
    /// End-to-end desk-scale validation over all family and density cells
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Node count M
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, value_enum)]
    pub class: Option<ClassArg>,
    /// Edge probability (default: class preset)
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of unique graphs (default: class preset)
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset (JSON lines)
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Alias for --train-seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub train: TrainSection,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Number of shots [default: 512]
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Reference dataset
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Report JSON path [default: report.json]
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write the report as a one-row CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write pooled degree frequencies next to the binomial reference
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// ER baseline draws [default: 1000000]
    #[arg(long)]
    pub baseline_trials: Option<usize>,
    /// MMD bandwidth (default: median heuristic of the dataset)
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct HpoArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Selection rule family (default: from the dataset header)
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub baseline_trials: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainSection,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Node counts to run [default: 6 7]
    #[arg(long, num_args = 1..)]
    pub nodes: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub baseline_trials: Option<usize>,
    /// Fresh-seed retries for a cell that misses its target [default: 1]
    #[arg(long)]
    pub retries: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainSection,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs.or(file.jobs) {
        if j == 0 {
            return Err(UsageError("--jobs must be >= 1".into()).into());
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::GenData(a) => commands::gen_data(a, &file),
        Command::Train(a) => commands::train(a, &file),
        Command::Sample(a) => commands::sample(a, &file),
        Command::Eval(a) => commands::eval(a, &file),
        Command::Hpo(a) => commands::hpo(a, &file),
        Command::Reproduce(a) => reproduce::cmd_reproduce(a, &file),
    })
}
