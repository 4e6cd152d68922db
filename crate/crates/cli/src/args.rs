use clap::{Args, Parser, Subcommand, ValueEnum};
use pspline::{SpaceKind, SplitStrategy};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "pspline",
    version,
    about = "C1 cubic Powell-Sabin splines: refinement, bases, checks, fitting"
)]
pub struct Cli {
    /// Worker threads for the parallel kernels (default: all cores). PSPLINE_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Powell-Sabin refine a mesh and write ps.json.
    Refine(RefineArgs),
    /// Build a spline basis and report its dimension and duality residuals.
    Basis(BasisArgs),
    /// Per-edge smoothness residuals of the basis (or of a stored spline) as CSV.
    Check(CheckArgs),
    /// Least-squares fit of scattered (x,y,value) samples.
    Fit(FitArgs),
    /// Evaluate a stored spline on a grid or at given points.
    Eval(EvalArgs),
    /// Fit a test function on successive uniform refinements.
    Convergence(ConvergenceArgs),
    /// Dump Bernstein-Bezier nets of a spline or of one basis function.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// mesh.json, or ps.json (whose split points are then used as given).
    #[arg(long)]
    pub mesh: PathBuf,
    /// Split point rule for plain meshes.
    #[arg(long, value_parser = parse_split, default_value = "incenter")]
    pub split: SplitStrategy,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long, value_parser = parse_space, default_value = "reduced")]
    pub space: SpaceKind,
    /// Largest accepted deviation of the duality matrix from the identity.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Also list every functional with its control point.
    #[arg(long)]
    pub report: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Mesh whose basis functions are checked; ignored with --spline.
    #[arg(long, required_unless_present = "spline")]
    pub mesh: Option<PathBuf>,
    #[arg(long, value_parser = parse_split, default_value = "incenter")]
    pub split: SplitStrategy,
    #[arg(long, value_parser = parse_space, default_value = "reduced")]
    pub space: SpaceKind,
    /// Check a stored spline instead of the basis.
    #[arg(long)]
    pub spline: Option<PathBuf>,
    /// Smoothness order to check (0, 1 or 2).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub order: u8,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Per-edge CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long, value_parser = parse_space, default_value = "reduced")]
    pub space: SpaceKind,
    /// CSV with header x,y,value.
    #[arg(long)]
    pub data: PathBuf,
    /// Ridge weight used only if the design matrix is rank deficient.
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Embed the Bernstein-Bezier nets in spline.json.
    #[arg(long)]
    pub patches: bool,
    /// spline.json (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fit report JSON (stderr if omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub spline: PathBuf,
    /// Grid resolution per axis over the bounding box.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// CSV with header x,y; replaces the grid.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Also write the gradient columns dx,dy.
    #[arg(long)]
    pub gradient: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TestFunction {
    /// sin(pi x) sin(pi y)
    Sinsin,
    /// Franke's exponential test function.
    Franke,
    /// x^2 y - 2 y^3, reproduced exactly.
    Cubic,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Base mesh (default: unit square split into two triangles).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, value_parser = parse_split, default_value = "barycenter")]
    pub split: SplitStrategy,
    #[arg(long, value_parser = parse_space, default_value = "reduced")]
    pub space: SpaceKind,
    #[arg(long, value_enum, default_value = "sinsin")]
    pub function: TestFunction,
    /// Uniform refinement levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub levels: Vec<usize>,
    /// Samples per degree of freedom.
    #[arg(long, default_value_t = 6.0)]
    pub oversampling: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-level CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Spline to export.
    #[arg(long, conflicts_with = "mesh")]
    pub spline: Option<PathBuf>,
    /// Mesh whose basis function --basis is exported.
    #[arg(long, requires = "basis")]
    pub mesh: Option<PathBuf>,
    #[arg(long, value_parser = parse_split, default_value = "incenter")]
    pub split: SplitStrategy,
    #[arg(long, value_parser = parse_space, default_value = "reduced")]
    pub space: SpaceKind,
    #[arg(long)]
    pub basis: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<SplitStrategy, String> {
    s.parse()
}

fn parse_space(s: &str) -> Result<SpaceKind, String> {
    s.parse().map_err(|e: pspline::FitError| e.to_string())
}
