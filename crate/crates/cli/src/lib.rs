//! Command-line driver for the `coin` pipeline: stage-by-stage commands that
//! share one run directory, a full run, and the hyperparameter sweep.
//!
//! Exit status: 0 success, 1 usage or config error, 2 data error, 3
//! numerical divergence.

pub mod config;
pub mod error;
pub mod files;
pub mod stages;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, parse_config};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "coin", version, about = "Contrastive manifold-margin pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or load the dataset and write the train/test split.
    GenData(CommonArgs),
    /// Expand the training split with generated neighbors.
    Augment(CommonArgs),
    /// Build the signed neighbor graph over the expanded set.
    Graph(CommonArgs),
    /// Train the embedding network.
    Train(CommonArgs),
    /// Score the test split and export the latent projection.
    Eval(CommonArgs),
    /// All stages in one run directory.
    RunAll(CommonArgs),
    /// Grid over graph neighbor counts and lambda, repeated over seeds.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config; defaults fill omitted fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Global seed, overriding the config. For `sweep` it replaces the seed list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long)]
    pub out: PathBuf,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::GenData(a)
            | Command::Augment(a)
            | Command::Graph(a)
            | Command::Train(a)
            | Command::Eval(a)
            | Command::RunAll(a)
            | Command::Sweep(a) => a,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    let out = args.out.as_path();
    if let Command::Sweep(_) = cli.command {
        let mut base = load_config(args.config.as_deref(), None, out)?;
        if let Some(s) = args.seed {
            base.sweep.seeds = vec![s];
        }
        config::echo_config(&base, out)?;
        let (runs, rows) = sweep::sweep(&base, out)?;
        let failed = runs.iter().filter(|r| r.outcome.is_err()).count();
        println!("{} runs over {} grid points, {failed} failed", runs.len(), rows.len());
        if failed == runs.len() {
            return Err(CliError::Usage("every sweep run failed".into()));
        }
        return Ok(());
    }

    let config = load_config(args.config.as_deref(), args.seed, out)?;
    config::echo_config(&config, out)?;
    match &cli.command {
        Command::GenData(_) => stages::gen_data(&config, out),
        Command::Augment(_) => stages::augment(&config, out),
        Command::Graph(_) => stages::graph(&config, out),
        Command::Train(_) => stages::train(&config, out),
        Command::Eval(_) => stages::eval(&config, out).map(|m| report(&m)),
        Command::RunAll(_) => stages::run_all(&config, out).map(|m| report(&m)),
        Command::Sweep(_) => unreachable!("handled above"),
    }
}

fn report(m: &coin_core::MetricsReport) {
    let ratio = m.margin_ratio.map_or("n/a".to_string(), |r| format!("{r:.4}"));
    println!("accuracy {:.4}  auc {:.4}  margin ratio {ratio}", m.accuracy, m.auc);
}
