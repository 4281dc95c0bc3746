//! `mvpir`: set up, serve, query, audit and benchmark the PIR scheme.
//!
//! Exit codes: 0 success, 1 protocol failure or failed check, 2 usage or
//! configuration error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "mvpir",
    version,
    about = "Multi-server PIR from matching vector families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build parameters and write a bundle directory.
    Setup(SetupArgs),
    /// Answer queries for one server over TCP.
    Serve(ServeArgs),
    /// Retrieve one record.
    Query(QueryArgs),
    /// Compare per-server query distributions of two records.
    Audit(AuditArgs),
    /// Measure communication against the closed-form counts.
    Bench(BenchArgs),
    /// Search for a sparse decoding polynomial.
    SearchDecoder(SearchArgs),
    /// Check a matching vector family file.
    ValidateMvf(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MvfKind {
    /// Brute force when M^k fits the budget, otherwise the symmetric family.
    Auto,
    Brute,
    Grolmusz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecoderKind {
    /// Built-in fixtures, then search, then Lagrange.
    Auto,
    Search,
    Lagrange,
}

#[derive(Args, Debug)]
pub struct SetupArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 2)]
    pub e: usize,
    /// Family dimension for brute force, or the largest dimension accepted
    /// for the symmetric family.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Number of records.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value = "bundle")]
    pub out: PathBuf,
    /// Field descriptor such as `GF(2^9):x^9+x^4+1`; defaults to the
    /// smallest field containing the m-th roots of unity.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long, value_enum, default_value_t = MvfKind::Auto)]
    pub mvf: MvfKind,
    /// Ground set size of the symmetric family.
    #[arg(long)]
    pub h: Option<usize>,
    /// Subset size of the symmetric family; defaults to max(1, h/2).
    #[arg(long)]
    pub weight: Option<usize>,
    #[arg(long, value_enum, default_value_t = DecoderKind::Auto)]
    pub decoder: DecoderKind,
    /// Extra fixture file consulted before the built-in fixtures.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub tmax: usize,
    /// Cap on brute-force and decoder search work.
    #[arg(long, default_value_t = 10_000_000)]
    pub search_budget: u64,
    /// Database as a bit string, e.g. `0110`; random records otherwise.
    #[arg(long)]
    pub bits: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated server addresses stored in the bundle.
    #[arg(long, value_delimiter = ',')]
    pub servers: Vec<String>,
    /// Audit budget stored in the bundle.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Database file overriding the bundle's.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Server number, 1-based; queries for other servers are refused.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long)]
    pub addr: Option<String>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub servers: Vec<String>,
    /// Record number, 1-based.
    #[arg(long)]
    pub tau: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Answer in-process from the bundle's database.
    #[arg(long)]
    pub local: bool,
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub tau1: usize,
    #[arg(long)]
    pub tau2: usize,
    /// Largest m^k enumerated by the exact audit.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Estimate distances from this many random queries instead.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub m: u64,
    /// `p^d` or a full descriptor `GF(p^d):modulus`.
    #[arg(long)]
    pub field: String,
    #[arg(long, default_value_t = 4)]
    pub tmax: usize,
    #[arg(long, default_value_t = 1_000_000_000)]
    pub budget: u64,
    /// Append the result to this fixture file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub file: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Setup(a) => commands::setup(&a),
        Command::Serve(a) => commands::serve(&a),
        Command::Query(a) => commands::query(&a),
        Command::Audit(a) => commands::audit(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::SearchDecoder(a) => commands::search_decoder(&a),
        Command::ValidateMvf(a) => commands::validate_mvf(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
