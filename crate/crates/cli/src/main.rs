//! Command-line driver for the inversion testbed.

mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "invlab", version, about = "Neural matrix inversion testbed")]
struct Cli {
    /// Output directory for CSVs, checkpoints and run manifests.
    #[arg(long, global = true, env = "INVLAB_OUT", default_value = "out")]
    out: PathBuf,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArg {
    /// key=value config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample (A, A⁻¹) datasets from preset or custom boxes.
    GenData(commands::GenData),
    /// Train an MLP on a dataset and save the checkpoint.
    Train(commands::Train),
    /// Average absolute error of a predictor on a test set.
    Eval(commands::Eval),
    /// Inverse blow-up and approximation-failure probes near a singular matrix.
    Probe(commands::Probe),
    /// Clearance of dataset boxes from the singular set.
    Regions(commands::Regions),
    /// Activation regions, affine maps and LP gap bounds of a 2-layer model.
    Analyze(commands::Analyze),
    /// Randomized falsification of the Lipschitz bound library.
    Lipschitz(commands::Lipschitz),
    /// Plot-ready grids of the singular set and the analytic-network sweep.
    Figures(commands::Figures),
    /// Forward-pass timings (hardware dependent, informational).
    Bench(commands::Bench),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let out = cli.out.as_path();
    let result = match &cli.command {
        Command::GenData(c) => c.run(out),
        Command::Train(c) => c.run(out),
        Command::Eval(c) => c.run(out),
        Command::Probe(c) => c.run(out),
        Command::Regions(c) => c.run(out),
        Command::Analyze(c) => c.run(out),
        Command::Lipschitz(c) => c.run(out),
        Command::Figures(c) => c.run(out),
        Command::Bench(c) => c.run(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
