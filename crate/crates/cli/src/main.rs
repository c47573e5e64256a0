use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frenkel_cli::{run, BackendKind, Command, Experiment, Overrides};

#[derive(Parser)]
#[command(name = "frenkel", version, about = "Frenkel exciton spectra with VQD and learned error mitigation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact diagonalization, oscillator strengths and Davydov splitting.
    Exact(Common),
    /// Variational quantum deflation on the configured backend.
    Vqd(Common),
    /// Generate a noisy training set and fit the mitigator network.
    TrainMitigator {
        #[command(flatten)]
        common: Common,
        /// Also run the dataset-size learning-curve sweep.
        #[arg(long)]
        sweep: bool,
    },
    /// Exact, noisy VQD, post-selection, Post-DL and optionally DL-VQD.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Number of VQD states to solve.
    #[arg(long)]
    states: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Exact(c) => (Command::Exact, c),
        Cmd::Vqd(c) => (Command::Vqd, c),
        Cmd::TrainMitigator { common, sweep } => (Command::TrainMitigator { sweep }, common),
        Cmd::Pipeline(c) => (Command::Pipeline, c),
    };
    let overrides = Overrides { out: common.out, seed: common.seed, backend: common.backend, states: common.states };
    let result = Experiment::load(&common.config, &overrides).and_then(|exp| {
        let outcome = run(command, &exp)?;
        println!("{}", exp.output.join("report.json").display());
        Ok(outcome)
    });
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
