//! `faircover` command-line tool.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use faircover::Error;

#[derive(Parser)]
#[command(name = "faircover", version, about = "Robust graph covering with group fairness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Choose monitors with an exact method or a heuristic.
    Solve(SolveArgs),
    /// Brute-force optimum of a small instance.
    Oracle(OracleArgs),
    /// Worst-case coverage of a given monitor set.
    Evaluate(EvaluateArgs),
    /// Price-of-fairness curves and estimates as CSV.
    #[command(subcommand)]
    Pof(PofCommand),
    /// Write a generated network as graph JSON.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Fair exact solution against heuristics as CSV.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
pub struct InstanceArgs {
    /// Graph JSON file.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub graph: Option<PathBuf>,
    /// Bundled network instead of a file.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// Add the reverse of every edge.
    #[arg(long)]
    pub symmetrize: bool,
    /// Number of monitors `I`.
    #[arg(long, short = 'i')]
    pub monitors: usize,
    /// Number of monitors that may fail `J`.
    #[arg(long, short = 'j', conflicts_with = "uncertainty", required_unless_present = "uncertainty")]
    pub fail_budget: Option<usize>,
    /// Polyhedral uncertainty JSON `{"A": [[..]], "b": [..]}` instead of a failure budget.
    #[arg(long)]
    pub uncertainty: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Fixture {
    Star,
}

#[derive(Args, Clone)]
pub struct CapArgs {
    /// Scenario enumeration cap (default from FAIRCOVER_SCENARIO_CAP or 1e6).
    #[arg(long)]
    pub scenario_cap: Option<u128>,
    /// Label block cap (default from FAIRCOVER_BLOCK_CAP or 1e5).
    #[arg(long)]
    pub block_cap: Option<u128>,
    /// Oracle work cap (default from FAIRCOVER_ORACLE_CAP or 1e7).
    #[arg(long)]
    pub oracle_cap: Option<u128>,
}

#[derive(Args, Clone)]
pub struct FairnessArgs {
    /// Fairness fraction `W`.
    #[arg(long, short = 'w', conflicts_with = "auto_w")]
    pub w: Option<f64>,
    /// Use the largest feasible `W` on the grid.
    #[arg(long)]
    pub auto_w: bool,
    /// Grid step of the `W` search.
    #[arg(long, default_value_t = 0.04)]
    pub w_step: f64,
    /// Solve every grid point instead of binary searching.
    #[arg(long)]
    pub full_sweep: bool,
}

#[derive(Args, Clone)]
pub struct ExactArgs {
    /// Number of candidate covering schemes `K`.
    #[arg(long = "K", short = 'k', alias = "k", default_value_t = 1)]
    pub k: usize,
    /// Dual cap `M` (default `10·N`).
    #[arg(long)]
    pub big_m: Option<f64>,
    #[arg(long)]
    pub no_symmetry_breaking: bool,
    /// Leave out the valid inequalities.
    #[arg(long)]
    pub no_valid_cuts: bool,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Benders,
    Monolithic,
    Saturated,
    Oracle,
    Greedy,
    Dc,
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub fairness: FairnessArgs,
    #[command(flatten)]
    pub exact: ExactArgs,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long, value_enum, default_value = "benders")]
    pub solver: SolverArg,
    /// Result JSON path (stdout if absent).
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// JSONL iteration log of the block generation.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Leave wall-clock times out of the result.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OracleMode {
    /// Worst-case coverage without fairness.
    Rc,
    /// Worst-case coverage with floors on the coverage itself.
    Fair,
    /// Two-stage value with floors on the covering scheme.
    TwoStage,
}

#[derive(Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "two-stage")]
    pub mode: OracleMode,
    #[arg(long, short = 'w', default_value_t = 0.0)]
    pub w: f64,
    /// Consider every monitor set of size at most `I`.
    #[arg(long)]
    pub exhaustive: bool,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Monitor node ids, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub at: Vec<i64>,
    #[arg(long, short = 'w', default_value_t = 0.0)]
    pub w: f64,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum PofCommand {
    /// Closed-form PoF of two communities as the larger one grows.
    Curves(CurveArgs),
    /// Monte Carlo PoF over stochastic block model graphs.
    Sbm(PofSbmArgs),
    /// PoF of the worst-case family by exact enumeration.
    Worst(PofWorstArgs),
}

#[derive(Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 20)]
    pub small: usize,
    #[arg(long, default_value_t = 20)]
    pub large_min: usize,
    #[arg(long, default_value_t = 10_000)]
    pub large_max: usize,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, short = 'i', default_value_t = 12)]
    pub monitors: usize,
    /// Failure rates `γ = J/I`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.2])]
    pub gammas: Vec<f64>,
    /// Round `γ·I` to an integer.
    #[arg(long)]
    pub integer_failures: bool,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct SbmArgs {
    /// Community sizes, nondecreasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Within-community coefficient `a` (`p_in = a/|N_c|`).
    #[arg(long, default_value_t = 3.0)]
    pub a: f64,
    /// Between-community coefficient `b`.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct PofSbmArgs {
    #[command(flatten)]
    pub sbm: SbmArgs,
    #[arg(long, short = 'i')]
    pub monitors: usize,
    #[arg(long, short = 'j', default_value_t = 0)]
    pub fail_budget: usize,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "oracle")]
    pub solver: SolverArg,
    #[command(flatten)]
    pub exact: ExactArgs,
    #[arg(long, default_value_t = 0.04)]
    pub w_step: f64,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// Full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
pub struct PofWorstArgs {
    /// Network sizes, comma separated (each at least 9).
    #[arg(long, value_delimiter = ',', default_values_t = [9, 11, 19])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.04)]
    pub w_step: f64,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum GenerateCommand {
    /// Stochastic block model network.
    Sbm(GenerateSbmArgs),
    /// Member of the worst-case family.
    Worst(GenerateWorstArgs),
}

#[derive(Args)]
pub struct GenerateSbmArgs {
    #[command(flatten)]
    pub sbm: SbmArgs,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenerateWorstArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Solvers to compare; exact ones are run with fairness.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SolverArg::Benders, SolverArg::Greedy, SolverArg::Dc])]
    pub solvers: Vec<SolverArg>,
    #[command(flatten)]
    pub fairness: FairnessArgs,
    #[command(flatten)]
    pub exact: ExactArgs,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

/// Exit codes: 0 solved, 1 bad input or failure, 2 infeasible, 3 resource limit.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::CapExceeded { .. } | Error::Limit(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Pof(c) => commands::pof(&c),
        Command::Generate(c) => commands::generate(&c),
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
