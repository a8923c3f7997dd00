use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hddpg_cli::{commands, CliResult, RunConfig};
use hddpg_core::ddpg::ExplorationMode;

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  internal error
  2  invalid configuration or missing prerequisite
  3  I/O failure
  4  malformed input file
  5  acceptance gate failed (imitation accuracy below val_floor)";

#[derive(Parser)]
#[command(name = "hddpg", version, about = "Heuristic DDPG for a simulated planar arm", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key = value configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Exploration mode: gaussian_noise, heuristic or none.
    #[arg(long, global = true)]
    mode: Option<ExplorationMode>,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// Output root. Overrides out_dir from the config file.
    #[arg(long, global = true, env = "HDDPG_OUT")]
    out: Option<PathBuf>,
    /// Replace outputs left by an earlier run.
    #[arg(long, global = true)]
    overwrite: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Render the labeled hand and robot frames and write the manifest.
    GenDataset,
    /// Train the grid classifier on the generated dataset.
    TrainImitation,
    /// Generate, render and grid-map the demonstration.
    RecordDemo,
    /// Train a policy against the recorded demonstration.
    TrainPolicy,
    /// Run greedy episodes from a checkpoint.
    Evaluate {
        /// Defaults to the final checkpoint of the configured mode and seed.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train both exploration modes over several seeds and compare them.
    Compare,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    if let Some(episodes) = cli.episodes {
        cfg.episodes = episodes;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    match cli.command {
        Command::GenDataset => commands::gen_dataset(&cfg, cli.overwrite),
        Command::TrainImitation => commands::train_imitation_cmd(&cfg, cli.overwrite),
        Command::RecordDemo => commands::record_demo_cmd(&cfg, cli.overwrite),
        Command::TrainPolicy => commands::train_policy(&cfg, cli.overwrite),
        Command::Evaluate { checkpoint } => commands::evaluate_cmd(&cfg, checkpoint.as_deref(), cli.overwrite),
        Command::Compare => commands::compare(&cfg, cli.overwrite),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hddpg: {e}");
            e.exit_code()
        }
    }
}
