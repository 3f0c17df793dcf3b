//! `loopsynth`: synthesize affine loops from polynomial invariants, check
//! loops against invariants, and run the benchmark corpus.

mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    /// No loop exists in the searched space, or the invariant does not hold.
    pub const NOT_FOUND: u8 = 2;
    pub const TIMEOUT: u8 = 3;
    pub const PARSE: u8 = 4;
    pub const SOLVER: u8 = 5;
}

#[derive(Parser)]
#[command(name = "loopsynth", version, about = "Synthesize affine loops from polynomial invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a loop for the invariant in a spec file.
    Synth(SynthArgs),
    /// Check a loop against an invariant.
    Verify(VerifyArgs),
    /// Check that two loops share an invariant under a variable map.
    Equiv(EquivArgs),
    /// Synthesize every spec file in a directory.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TierArg {
    Un,
    Up,
    Fu,
    Auto,
}

#[derive(Args, Clone, Debug)]
pub struct SolverArgs {
    /// SMT solver executable.
    #[arg(long, env = "LOOPSYNTH_SOLVER", default_value = "z3")]
    pub solver: PathBuf,
    /// Time budget in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
}

#[derive(Args, Clone, Debug)]
pub struct SearchArgs {
    #[arg(long, value_enum)]
    pub tier: Option<TierArg>,
    /// Root multiplicities, e.g. `2,1`.
    #[arg(long)]
    pub partition: Option<String>,
    /// Number of state variables, padding with free auxiliaries.
    #[arg(long)]
    pub size: Option<usize>,
    /// Add a variable that stays constant 1.
    #[arg(long)]
    pub aux_one: bool,
    /// Require every variable to change in the first iteration.
    #[arg(long)]
    pub all_change: bool,
}

#[derive(Args)]
pub struct SynthArgs {
    pub spec: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Number of distinct loops.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Write the first template's constraint problem as SMT-LIB (`-` for
    /// stdout) and stop.
    #[arg(long, value_name = "FILE")]
    pub emit_smt2: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    /// Templates tried in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Invariant, `&&`-separated; defaults to the file's `# invariant:` line.
    #[arg(long, short)]
    pub invariant: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct EquivArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Invariant over the first loop's names; defaults to its `# invariant:` line.
    #[arg(long, short)]
    pub invariant: Option<String>,
    /// Variable map `a=x,b=y` from the first loop to the second; unmapped
    /// names map to themselves.
    #[arg(long)]
    pub map: Option<String>,
}

#[derive(Args)]
pub struct BenchArgs {
    pub dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum)]
    pub tier: Option<TierArg>,
    /// Also write the results as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Print the results as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Instances run at once.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Skip instances tagged `reconstructed`.
    #[arg(long)]
    pub strict: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Equiv(a) => commands::equiv(&a),
        Command::Bench(a) => bench::run(&a),
    };
    ExitCode::from(code)
}
