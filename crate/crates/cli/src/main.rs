use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sawtooth_cli::commands;
use sawtooth_cli::config::RawConfig;

/// Diffusion-based time-series generation with deterministic reverse
/// sampling and sawtooth resampling.
#[derive(Parser)]
#[command(name = "sawtooth", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the run configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override [run].master_seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    GenData(CommonArgs),
    /// Train the denoiser on a dataset file.
    Train(CommonArgs),
    /// Generate samples with ddpm, ddim or the sawtooth sampler.
    Sample(CommonArgs),
    /// Emit per-step similarity curves for seeded sample runs.
    EvalCurve(CommonArgs),
    /// Train-on-synthetic / test-on-real metrics for two dataset files.
    Tstr(CommonArgs),
    /// Time the ancestral baseline against the sawtooth sampler.
    Bench(CommonArgs),
    /// Check hand-written gradients against finite differences.
    Gradcheck(CommonArgs),
}

type Runner = fn(&RawConfig, Option<u64>) -> anyhow::Result<()>;

fn run(cli: Cli) -> anyhow::Result<()> {
    let (args, runner): (&CommonArgs, Runner) = match &cli.command {
        Command::GenData(a) => (a, commands::cmd_gen_data),
        Command::Train(a) => (a, commands::cmd_train),
        Command::Sample(a) => (a, commands::cmd_sample),
        Command::EvalCurve(a) => (a, commands::cmd_eval_curve),
        Command::Tstr(a) => (a, commands::cmd_tstr),
        Command::Bench(a) => (a, commands::cmd_bench),
        Command::Gradcheck(a) => (a, commands::cmd_gradcheck),
    };
    let raw = RawConfig::load(&args.config)?;
    runner(&raw, args.seed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // single-line, machine-parsable error
            let flat = e.to_string().replace('\n', " ");
            eprintln!("error: {flat}");
            ExitCode::FAILURE
        }
    }
}
