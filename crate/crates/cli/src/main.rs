use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use inclusion_cli::{run, Command, RunOptions, OUT_ENV};
use inclusion_core::exec::{configure_threads, Execution};

/// Numerical laboratory for inclusion determination in div(σ∇u) + qu = 0.
#[derive(Debug, Parser)]
#[command(name = "inclusion-lab", version, after_help = format!("Outputs default to ${OUT_ENV}/<config>/<command> (or out/<config>/<command>)."))]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    /// Override of grid.resolution.
    #[arg(long)]
    resolution: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let exec = match args.threads {
        Some(1) => Execution::Sequential,
        _ => Execution::default(),
    };
    if let Some(n) = args.threads {
        if let Err(e) = configure_threads(n) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions { config: args.config, out: args.out, resolution: args.resolution, exec };
    match run(args.command, &opts) {
        Ok(summary) => {
            for c in summary.checks.iter() {
                println!("{} {}: {:.4e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
            }
            println!("wrote {}", summary.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
