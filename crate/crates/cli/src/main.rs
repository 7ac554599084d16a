use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ctxdbn_cli::{run, Command, Format, QueryRequest, DEFAULT_PRECISION, MAX_PRECISION};

/// Probabilistic reasoning over context-labeled EL ontologies and dynamic
/// Bayesian networks.
#[derive(Debug, Parser)]
#[command(name = "ctxdbn", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Knowledge-base file.
    #[arg(long, value_name = "FILE")]
    kb: PathBuf,
    /// Query axiom, e.g. "A and exists r . B <= C".
    #[arg(long, value_name = "STR")]
    query: Option<String>,
    /// Time slice (1 is the initial slice).
    #[arg(long, value_name = "N")]
    time: Option<usize>,
    /// Horizon of the lower bound reported by prob-eventually [default: 32].
    #[arg(long, value_name = "N")]
    horizon: Option<usize>,
    /// Timed evidence, e.g. "x@1=1,y@3=0".
    #[arg(long, value_name = "STR")]
    evidence: Option<String>,
    /// Conditioning context, e.g. "x,!z".
    #[arg(long, value_name = "STR")]
    given: Option<String>,
    /// A total world, e.g. "x,!y,z".
    #[arg(long, value_name = "STR")]
    world: Option<String>,
    /// Recompute with the brute-force route and fail on disagreement.
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Decimal places of printed probabilities.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_PRECISION as u64,
          value_parser = clap::value_parser!(u64).range(0..=MAX_PRECISION as u64))]
    precision: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let req = QueryRequest {
        command: cli.command,
        kb: cli.kb,
        query: cli.query,
        time: cli.time,
        horizon: cli.horizon,
        evidence: cli.evidence,
        given: cli.given,
        world: cli.world,
        oracle: cli.oracle,
        format: cli.format,
        precision: cli.precision as usize,
    };
    let outcome = run(&req);
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
