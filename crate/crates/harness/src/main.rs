use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dms_harness::{run, Command, Overrides};

#[derive(Parser)]
#[command(name = "dms", version, about = "Distributed muting schedule experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated seeds; replaces the config's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Write per-seed JSON traces.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write topology and gain matrices per seed.
    GenTopology(Common),
    /// Time squeezing of the guaranteed-rate game only.
    RunGbr(Common),
    /// Best-effort game with AIMD over all TTIs.
    RunBe(Common),
    /// Full epoch loop, plus the configured baseline.
    RunDms(Common),
    /// Exact optimum vs. distributed result on tiny instances.
    Oracle(Common),
    /// Overhead table and rate CDFs from a previous run-dms.
    Report(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, c) = match cli.command {
        Cmd::GenTopology(c) => (Command::GenTopology, c),
        Cmd::RunGbr(c) => (Command::RunGbr, c),
        Cmd::RunBe(c) => (Command::RunBe, c),
        Cmd::RunDms(c) => (Command::RunDms, c),
        Cmd::Oracle(c) => (Command::Oracle, c),
        Cmd::Report(c) => (Command::Report, c),
    };
    let ov = Overrides { seeds: c.seeds, epochs: c.epochs, trace: c.trace };
    match run(cmd, &c.config, &c.out, &ov) {
        Ok(s) => {
            eprintln!("{}: wrote {} to {}", cmd.name(), s.files.join(", "), c.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
