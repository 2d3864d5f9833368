use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seplab::runner::{run, Command, RunArgs};

/// Source-channel separation laboratory.
#[derive(Parser)]
#[command(name = "seplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rate-distortion curve on a grid (JSON + rd.csv).
    Rd(Common),
    /// Compound-channel capacity.
    Capacity(Common),
    /// Random-coding error simulation over a compound channel.
    Simulate(Common),
    /// Error-exponent union bound.
    Exponent(Common),
    /// Exact covering-packing duality sweep; exit 3 on any inequality.
    Duality(Common),
    /// A_n and threshold functionals (JSON + threshold.csv).
    Threshold(Common),
    /// Multi-user unicast simulation and layered replacement.
    Multiuser(Common),
    /// The full reference scenario set.
    VerifyAll(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, c) = match cli.command {
        Cmd::Rd(c) => (Command::Rd, c),
        Cmd::Capacity(c) => (Command::Capacity, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Exponent(c) => (Command::Exponent, c),
        Cmd::Duality(c) => (Command::Duality, c),
        Cmd::Threshold(c) => (Command::Threshold, c),
        Cmd::Multiuser(c) => (Command::Multiuser, c),
        Cmd::VerifyAll(c) => (Command::VerifyAll, c),
    };
    let args = RunArgs { config: c.config, out: c.out, seed: c.seed, threads: c.threads, budget: c.budget };
    let outcome = run(cmd, &args);
    for p in &outcome.reports {
        println!("{}", p.display());
    }
    if outcome.exit_code != 0 {
        eprintln!("seplab {}: {}", cmd.name(), outcome.message);
    }
    ExitCode::from(outcome.exit_code as u8)
}
