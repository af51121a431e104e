use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use saliency_bench::{run, Command};

#[derive(Parser)]
#[command(
    name = "saliency-bench",
    version,
    about = "Perturbation saliency explainers, metrics and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Saliency tensors and heatmaps for every (image, explainer) pair.
    Explain(Common),
    /// Insertion curves and mean AUC per explainer.
    Insertion(Common),
    /// Cascading parameter-randomization sanity checks.
    Sanity(Common),
    /// Seconds per saliency map for every explainer.
    Bench(Common),
    /// Writes the configured synthetic frames.
    Frames(Common),
}

#[derive(Args)]
struct Common {
    /// Run config, or a report written by an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Explain(a) => (Command::Explain, a),
        Sub::Insertion(a) => (Command::Insertion, a),
        Sub::Sanity(a) => (Command::Sanity, a),
        Sub::Bench(a) => (Command::Bench, a),
        Sub::Frames(a) => (Command::Frames, a),
    };
    match run(command, &args.config, args.out.as_deref(), args.seed) {
        Ok(dir) => {
            println!("{} finished; outputs in {}", command.name(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
