mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use anonet_core::registry::{AdversarySpec, ProtocolKind};
use anonet_core::Mode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "anonet", version, about = "Simulate protocols on anonymous dynamic networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Run a grid of sizes and seeds and write one metrics row per run.
    Sweep(SweepArgs),
    /// Check a property of a schedule or a protocol.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Write the schedule an adversary produces.
    Schedule(ScheduleArgs),
    /// Run a demonstration.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Args, Debug, Clone)]
struct ExperimentArgs {
    #[arg(long, value_parser = parse_protocol)]
    protocol: ProtocolKind,
    /// A named family, or replay:FILE.
    #[arg(long, value_parser = parse_adversary)]
    adversary: AdversarySpec,
    /// Defaults to the protocol's own mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Degree bound for degree-counting.
    #[arg(long)]
    d: Option<u64>,
    /// Expansion bound for expansion-counting.
    #[arg(long)]
    e: Option<u64>,
    /// Arrival-vector length for hd-naming.
    #[arg(long)]
    k_cap: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Required unless the adversary is a replay.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-round JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// One CSV row.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// The full run result as JSON.
    #[arg(long)]
    result: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    /// A count `K` (seeds 0..K), a range `a..b`, or a list `1,5,9`.
    #[arg(long, default_value = "5")]
    seeds: String,
    /// Defaults to standard output.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Also print a log-log slope of this metric against n.
    #[arg(long)]
    fit: Option<FitMetric>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FitMetric {
    Rounds,
    MaxBits,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Influence bounds in both directions, over the whole schedule.
    Lemma1 {
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Every round connected.
    Connectivity {
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Distinct arrival vectors of length k for every source and start round.
    HighDynamicity {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Equal states for node pairs in every round, under broadcast.
    Lockstep {
        #[arg(long, value_parser = parse_protocol)]
        protocol: ProtocolKind,
        #[arg(long, value_parser = parse_adversary)]
        adversary: AdversarySpec,
        #[arg(long)]
        n: Option<usize>,
        /// `leaves`, `mirror`, or pairs such as `1:2,3:4`.
        #[arg(long)]
        pairs: String,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        e: Option<u64>,
        /// Write the per-round table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long, value_parser = parse_adversary)]
    adversary: AdversarySpec,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    rounds: usize,
    /// Record the edge labels of every round too.
    #[arg(long)]
    labelings: bool,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum DemoCommand {
    /// Run a leaderless protocol on a ring and on a larger ring whose
    /// neighborhoods look the same up to the first halting round.
    Ring {
        /// A leaderless protocol, or `silence-counter`.
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        max_rounds: usize,
    },
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    s.parse().map_err(|e: anonet_core::registry::RegistryError| e.to_string())
}

fn parse_adversary(s: &str) -> Result<AdversarySpec, String> {
    s.parse().map_err(|e: anonet_core::registry::RegistryError| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: <Mode as std::str::FromStr>::Err| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Verify(cmd) => commands::verify(cmd),
        Command::Schedule(args) => commands::schedule(args),
        Command::Demo(cmd) => commands::demo(cmd),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
