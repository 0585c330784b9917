use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod check;
mod fmt;
mod input;
mod numfmt;
mod reach;
mod selftest;
mod simulate;

/// Model checker for quantum circuits and quantum transition systems.
#[derive(Parser, Debug)]
#[command(name = "qmc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every assertion of a CTQL file against a model.
    Check(CheckArgs),
    /// Compute the reachable subspace of a single-location model.
    Reach(ReachArgs),
    /// Print the branch tree of a model up to a depth.
    Simulate(SimulateArgs),
    /// Re-serialise model (.qts) or assertion (.ctql) files canonically.
    Fmt(FmtArgs),
    /// Cross-check the reachability routes and vectorisation identities on
    /// random channels.
    Selftest(SelftestArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug)]
#[group(id = "initial", required = true, multiple = false)]
pub struct InitArgs {
    /// Initial pure state as a ket expression, e.g. "(|0> + |1>)/sqrt2".
    #[arg(long, group = "initial")]
    pub init: Option<String>,
    /// File holding the initial density matrix as a literal `[[a, b], [c, d]]`.
    #[arg(long, group = "initial", value_name = "FILE")]
    pub init_density: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long = "assert", value_name = "FILE")]
    pub assertions: PathBuf,
    #[command(flatten)]
    pub init: InitArgs,
    /// Exploration depth; configurations first met at this depth are only
    /// kept when they close onto known ones.
    #[arg(long, default_value_t = qmc_core::checker::DEFAULT_BOUND as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub bound: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Include wall-clock timings in the report (makes output run-dependent).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct ReachArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub init: InitArgs,
    /// Also run the vectorised and fixpoint algorithms and report the
    /// largest mutual residual.
    #[arg(long)]
    pub verify: bool,
    /// Residual above which `--verify` reports a disagreement.
    #[arg(long, default_value_t = qmc_core::tol::MEMBER, value_parser = positive)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub init: InitArgs,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct FmtArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Rewrite the files in place instead of printing them.
    #[arg(long, conflicts_with = "check")]
    pub write: bool,
    /// Exit with status 1 if any file is not in canonical form.
    #[arg(long)]
    pub check: bool,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    #[arg(long, default_value_t = qmc_core::tol::MEMBER, value_parser = positive)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// Exit status of a run: 0 holds, 1 fails, 2 unknown, 3 error.
pub const EXIT_ERROR: u8 = 3;

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QMC_THREADS") {
        let n: usize =
            v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                anyhow::anyhow!("QMC_THREADS must be a positive integer, got `{v}`")
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Check(a) => check::run(&a),
        Command::Reach(a) => reach::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Fmt(a) => fmt::run(&a),
        Command::Selftest(a) => selftest::run(&a),
    }
}

fn main() -> ExitCode {
    // clap's own usage status (2) would read as an unknown verdict
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
