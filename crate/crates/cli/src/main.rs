//! `hwd`: construct, verify and report highway-dimension structures from the command line.

mod commands;
mod input;
mod report;
mod schema;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hwd::hierarchy::SpcBuilder;
use hwd::spc::HittingSetStrategy;
use hwd::tsp::SubSolver;
use hwd::HwdError;
use serde::Serialize;

use input::InputFormat;
use report::Report;

#[derive(Parser, Debug)]
#[command(name = "hwd", version, about = "Shortest-path covers, decompositions, tree covers, distance oracles and Subset-TSP")]
pub struct Cli {
    /// Worker threads for parallel phases; 0 uses every core.
    #[arg(long, global = true, env = "HWD_THREADS", default_value_t = 0)]
    threads: usize,
    /// Graph file format.
    #[arg(long, global = true, value_enum, default_value_t = InputFormat::Auto)]
    format: InputFormat,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Omit wall-clock timings so reports are byte-identical across runs.
    #[arg(long, global = true)]
    no_timings: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Shortest-path cover at one scale, with local sparsity and hub bounds.
    Spc(SpcArgs),
    /// Towns and sprawl of a minimal shortest-path cover.
    Towns(SpcArgs),
    /// Hub hierarchy over all scales (input is rescaled to minimum distance above 1).
    Hierarchy(HierarchyArgs),
    /// Padded decomposition, optionally with a Monte Carlo padding table.
    Decompose(DecomposeArgs),
    /// Strong sparse cover with hub balls and towns.
    Cover(CoverArgs),
    /// Sparse partition cover.
    PartitionCover(CoverArgs),
    /// Tree cover with full-pair verification; optionally persisted.
    Treecover(TreecoverArgs),
    /// Distance oracle: build, query, bench.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Subset TSP.
    #[command(subcommand)]
    Tsp(TspCmd),
    /// Re-check a saved report, tour or binary artifact against its graph.
    Verify(VerifyArgs),
    /// Write a generated instance in DIMACS format.
    Generate(GenerateArgs),
    /// Print the JSON Schema of a report envelope or command result.
    Schema(SchemaArgs),
}

#[derive(Args, Debug)]
pub struct SchemaArgs {
    /// Schema name (`report`, a command kind, or `tour`); omit with `--dir`.
    pub name: Option<String>,
    /// Write every schema as `<name>.schema.json` into this directory.
    #[arg(long, conflicts_with = "name")]
    pub dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GraphIn {
    /// Input graph (DIMACS `.gr` or `u v w` edge list, 0-based ids).
    #[arg(long = "in", value_name = "GRAPH")]
    pub input: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Greedy,
    ExactSmall,
}

impl From<StrategyArg> for HittingSetStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Greedy => HittingSetStrategy::Greedy,
            StrategyArg::ExactSmall => HittingSetStrategy::ExactSmall,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderArg {
    LocalSearch,
    EpsNet,
}

pub fn spc_builder(b: BuilderArg, s: StrategyArg) -> SpcBuilder {
    match b {
        BuilderArg::LocalSearch => SpcBuilder::LocalSearch(s.into()),
        BuilderArg::EpsNet => SpcBuilder::EpsNet,
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SpcArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub graph: GraphIn,
    /// Scale r > 0.
    #[arg(long)]
    pub r: f64,
    /// Accuracy, in [0, 1] (eps-net builder: (0, 1]).
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::ExactSmall)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = BuilderArg::LocalSearch)]
    pub builder: BuilderArg,
    /// Keep the cover as built instead of minimalizing it.
    #[arg(long)]
    pub no_minimalize: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct HierarchyArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub graph: GraphIn,
    /// Accuracy, in (0, 1/6].
    #[arg(long, default_value_t = 1.0 / 6.0)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::ExactSmall)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = BuilderArg::LocalSearch)]
    pub builder: BuilderArg,
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub graph: GraphIn,
    /// Cluster diameter bound Delta > 0.
    #[arg(long)]
    pub delta: f64,
    /// Accuracy, in [0, 1/4].
    #[arg(long, default_value_t = 0.125)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo trials for the padding table; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub trials: usize,
    /// Padding radii as fractions of r, each in [0, 1/8].
    #[arg(long, value_delimiter = ',', default_values_t = [0.0625])]
    pub gamma: Vec<f64>,
    /// Rate override; default uses the observed cover sparsity.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = StrategyArg::ExactSmall)]
    pub strategy: StrategyArg,
}

#[derive(Args, Debug, Serialize)]
pub struct CoverArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub graph: GraphIn,
    /// Cluster diameter bound Delta > 0.
    #[arg(long)]
    pub delta: f64,
    /// Accuracy: (0, 1/10] for `cover`, (0, 1] for `partition-cover`.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct TreecoverArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub graph: GraphIn,
    /// Accuracy, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::ExactSmall)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = BuilderArg::LocalSearch)]
    pub builder: BuilderArg,
    /// Binary output file.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum OracleCmd {
    /// Build an oracle, check the distance sandwich on every pair, and save it.
    Build(OracleBuildArgs),
    /// Estimate the distance between two vertices (original units).
    Query(OracleQueryArgs),
    /// Time seeded random queries.
    Bench(OracleBenchArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct OracleBuildArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub graph: GraphIn,
    /// Tree cover accuracy, in (0, 1]; estimates are within 1+2eps.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::ExactSmall)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = BuilderArg::LocalSearch)]
    pub builder: BuilderArg,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct OracleQueryArgs {
    /// Oracle file.
    #[arg(long = "in", value_name = "ORACLE")]
    pub input: PathBuf,
    pub u: usize,
    pub v: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct OracleBenchArgs {
    /// Oracle file.
    #[arg(long = "in", value_name = "ORACLE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum TspCmd {
    /// Tour through a terminal set.
    Solve(TspArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Exact,
    Heuristic,
}

impl From<SolverArg> for SubSolver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Exact => SubSolver::Exact,
            SolverArg::Heuristic => SubSolver::Heuristic,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct TspArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub graph: GraphIn,
    /// Terminal ids, 0-based, whitespace separated.
    #[arg(long)]
    pub terminals: PathBuf,
    /// Hierarchy accuracy, in (0, 1/6].
    #[arg(long, default_value_t = 1.0 / 6.0)]
    pub eps: f64,
    /// Dense-level threshold, at least 2; default derives it from eps and the cover sparsity.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, value_enum, default_value_t = SolverArg::Exact)]
    pub solver: SolverArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::ExactSmall)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = BuilderArg::LocalSearch)]
    pub builder: BuilderArg,
    /// Skip the brute-force comparison (run only up to 11 terminals).
    #[arg(long)]
    pub no_bruteforce: bool,
    /// Tour JSON output.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub graph: GraphIn,
    /// Report JSON, tour JSON, or tree cover / oracle binary.
    #[arg(long)]
    pub artifact: PathBuf,
    /// Terminal file; needed for bare tour JSON.
    #[arg(long)]
    pub terminals: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Star,
    Grid,
    Duostar,
    RandomGeometric,
    ClusteredTowns,
    EuclideanComplete,
    RandomConnected,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    /// Size: leaves (star), side (grid), pairs (duostar), clusters (clustered-towns), vertices otherwise.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Duostar accuracy parameter.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Connection radius (random-geometric).
    #[arg(long, default_value_t = 0.15)]
    pub radius: f64,
    /// Extra edges (random-connected).
    #[arg(long, default_value_t = 10)]
    pub extra: usize,
    /// Weight range (random-connected).
    #[arg(long, default_value_t = 1.0)]
    pub wmin: f64,
    #[arg(long, default_value_t = 4.0)]
    pub wmax: f64,
    /// Vertices per cluster (clustered-towns).
    #[arg(long, default_value_t = 3)]
    pub cluster_size: usize,
    /// Spoke weight (clustered-towns).
    #[arg(long, default_value_t = 10.0)]
    pub spoke: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Terminal file (clustered-towns).
    #[arg(long)]
    #[serde(skip)]
    pub terminals_out: Option<PathBuf>,
}

/// Exit status for an error: 1 for broken invariants, 2 for usage, parse and I/O problems.
fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<HwdError>() {
        Some(HwdError::Invariant(_) | HwdError::Internal(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("hwd: thread pool: {e}");
        return ExitCode::from(2);
    }
    if let Command::Schema(a) = &cli.cmd {
        return print_schema(a);
    }
    match commands::run(&cli.cmd, cli.format) {
        Ok(mut rep) => {
            if cli.no_timings {
                rep.timings_ms = None;
            }
            emit(&rep, cli.report.as_deref())
        }
        Err(e) => {
            eprintln!("hwd: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn print_schema(a: &SchemaArgs) -> ExitCode {
    if let Some(dir) = &a.dir {
        for name in schema::NAMES {
            let path = dir.join(format!("{name}.schema.json"));
            if let Err(e) = std::fs::write(&path, schema::render(name).unwrap_or_default()) {
                eprintln!("hwd: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        return ExitCode::SUCCESS;
    }
    match a.name.as_deref().and_then(schema::render) {
        Some(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        None => {
            eprintln!("hwd: unknown schema; expected one of {}", schema::NAMES.join(", "));
            ExitCode::from(2)
        }
    }
}

fn emit(rep: &Report, path: Option<&std::path::Path>) -> ExitCode {
    match serde_json::to_string_pretty(rep) {
        Ok(s) => println!("{s}"),
        Err(e) => {
            eprintln!("hwd: {e}");
            return ExitCode::from(2);
        }
    }
    if let Some(p) = path {
        if let Err(e) = rep.write(p) {
            eprintln!("hwd: {e:#}");
            return ExitCode::from(2);
        }
    }
    if rep.ok {
        ExitCode::SUCCESS
    } else {
        for c in rep.checks.iter().filter(|c| !c.ok) {
            eprintln!("hwd: check '{}' failed: {}", c.name, c.detail.as_deref().unwrap_or(""));
        }
        ExitCode::from(1)
    }
}
