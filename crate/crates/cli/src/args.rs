use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qzone::decomposition::Ranking;
use qzone::engine::InitPolicy;
use qzone::experiment::Method;
use qzone::render::ImageFormat;
use qzone::subsolvers::SolverKind;

/// Balanced, spatially coherent zone bipartitioning by impact-driven QUBO decomposition.
#[derive(Debug, Parser)]
#[command(name = "qzone", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded grid instance.
    Gen(GenArgs),
    /// Solve an instance with one method and write solution, trajectory and summary files.
    Solve(SolveArgs),
    /// Compare methods over several seeds under matched evaluation budgets.
    Compare(CompareArgs),
    /// Draw a partition map.
    Render(RenderArgs),
    /// List the highest-impact zones of an assignment.
    Impacts(ImpactsArgs),
    /// Act as an external subsolver: read one request on stdin, answer on stdout.
    Backend(BackendArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Number of attributes per zone.
    #[arg(long, default_value_t = qzone::zoning::DEFAULT_ATTRIBUTES)]
    pub attrs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight of the adjacency term.
    #[arg(long, default_value_t = qzone::zoning::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Hybrid,
    BaselineRandom,
    BaselineRoundrobin,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => Method::Direct,
            MethodArg::Hybrid => Method::Hybrid,
            MethodArg::BaselineRandom => Method::BaselineRandom,
            MethodArg::BaselineRoundrobin => Method::BaselineRoundRobin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Exact,
    Anneal,
    Tabu,
    Greedy,
    External,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => SolverKind::Auto,
            SolverArg::Exact => SolverKind::Exact,
            SolverArg::Anneal => SolverKind::Anneal,
            SolverArg::Tabu => SolverKind::Tabu,
            SolverArg::Greedy => SolverKind::Greedy,
            SolverArg::External => SolverKind::External,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankingArg {
    Magnitude,
    MostNegative,
}

impl From<RankingArg> for Ranking {
    fn from(r: RankingArg) -> Self {
        match r {
            RankingArg::Magnitude => Ranking::Magnitude,
            RankingArg::MostNegative => Ranking::MostNegative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Zeros,
    Random,
    Greedy,
}

impl From<InitArg> for InitPolicy {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Zeros => InitPolicy::Zeros,
            InitArg::Random => InitPolicy::Random,
            InitArg::Greedy => InitPolicy::Greedy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Svg,
    Ppm,
}

impl From<FormatArg> for ImageFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Svg => ImageFormat::Svg,
            FormatArg::Ppm => ImageFormat::Ppm,
        }
    }
}

/// Subsolver tuning shared by `solve` and `compare`.
#[derive(Debug, Args)]
pub struct SolverOpts {
    /// Command line of an external backend, split on whitespace.
    /// Falls back to the QZONE_EXTERNAL_SOLVER environment variable.
    #[arg(long, value_name = "CMD")]
    pub external_cmd: Option<String>,
    /// Seconds to wait for the external backend.
    #[arg(long, default_value_t = 300)]
    pub external_timeout: u64,
    /// Largest subproblem the exact solver accepts.
    #[arg(long, default_value_t = qzone::subsolvers::DEFAULT_EXACT_CAP)]
    pub exact_cap: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Hybrid)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub subsolver: SolverArg,
    /// Active-set size.
    #[arg(long, default_value_t = 16)]
    pub q: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 2)]
    pub patience: usize,
    /// Per-call subsolver budget (anneal sweeps, tabu moves, greedy flips).
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    pub init: InitArg,
    #[arg(long, value_enum, default_value_t = RankingArg::MostNegative)]
    pub ranking: RankingArg,
    /// Solution file whose assignment starts the run (overrides --init).
    #[arg(long, value_name = "SOLUTION")]
    pub warm_start: Option<PathBuf>,
    /// Files are written as PREFIX.solution.json, PREFIX.trajectory.csv and PREFIX.summary.json.
    #[arg(long, default_value = "qzone")]
    pub out_prefix: String,
    #[command(flatten)]
    pub solver: SolverOpts,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// A seed count (`10` means seeds 0..9) or a comma-separated list.
    #[arg(long, default_value = "10")]
    pub seeds: String,
    /// Total subsolver evaluations per run.
    #[arg(long, default_value_t = 20_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 16)]
    pub q: usize,
    #[arg(long, default_value_t = 20)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 2)]
    pub patience: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Direct, MethodArg::Hybrid, MethodArg::BaselineRandom])]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_enum, default_value_t = SolverArg::Anneal)]
    pub subsolver: SolverArg,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    pub init: InitArg,
    #[arg(long, value_enum, default_value_t = RankingArg::MostNegative)]
    pub ranking: RankingArg,
    /// Write the full report (config, table, every run) as JSON.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Write the text table to a file as well as stdout.
    #[arg(long)]
    pub text_out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub solver: SolverOpts,
}

#[derive(Debug, Args)]
pub struct RenderOpts {
    #[arg(long, default_value_t = 32)]
    pub cell_size: u32,
    /// Region fills as `#rrggbb,#rrggbb` (region 0 first).
    #[arg(long)]
    pub palette: Option<String>,
    /// Do not outline cut edges.
    #[arg(long)]
    pub no_boundary: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the output file's extension, else svg.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[command(flatten)]
    pub style: RenderOpts,
}

#[derive(Debug, Args)]
pub struct ImpactsArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, conflicts_with = "init")]
    pub solution: Option<PathBuf>,
    /// Evaluate at a fresh initial assignment instead of a solution.
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, value_enum, default_value_t = RankingArg::Magnitude)]
    pub ranking: RankingArg,
    /// Also draw a grayscale heatmap of |impact|.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, default_value_t = 32)]
    pub cell_size: u32,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = SolverArg::Exact)]
    pub kind: SolverArg,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = qzone::subsolvers::DEFAULT_EXACT_CAP)]
    pub exact_cap: usize,
}
