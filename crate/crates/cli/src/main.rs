mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use surfatlas::param::{HolePolicy, Scheme};
use surfatlas::verify::MeshFamily;

#[derive(Parser, Debug)]
#[command(name = "surfatlas", version, about = "Atlas-based parametrization and remeshing of triangulated surfaces")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a mesh and report its topology.
    Info(InputArgs),
    /// Split a mesh into parametrizable patches.
    Atlas(AtlasCmd),
    /// Remesh a surface through its atlas.
    Remesh(RemeshCmd),
    /// Laplace convergence study on the unit square.
    Convergence(ConvergenceCmd),
    /// Singular-value quality of the atlas parametrizations.
    Quality(QualityCmd),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Input mesh (.stl, .obj or .msh).
    input: PathBuf,

    /// Input format, overriding the extension: stl-ascii, stl-binary, obj, msh.
    #[arg(long)]
    format: Option<String>,

    /// Merge STL vertices closer than this distance.
    #[arg(long)]
    weld: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct AtlasArgs {
    /// Dihedral angle in degrees above which an edge is a feature.
    #[arg(long, default_value_t = surfatlas::features::DEFAULT_FEATURE_ANGLE)]
    angle: f64,

    #[arg(long, default_value_t = surfatlas::atlas::DEFAULT_MAX_TRIANGLES)]
    max_triangles: usize,

    /// Difference scheme: mvc or fem.
    #[arg(long, default_value = "mvc")]
    scheme: Scheme,

    /// Inner loops: auto, neumann or fill.
    #[arg(long, default_value = "auto")]
    hole_policy: HolePolicy,

    /// Largest hole filled under the auto policy, in vertices.
    #[arg(long, default_value_t = surfatlas::param::DEFAULT_HOLE_THRESHOLD)]
    hole_threshold: usize,
}

#[derive(Args, Debug, Clone)]
pub struct AtlasCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    atlas: AtlasArgs,

    /// Patch-tagged model with its BRep, written as msh.
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// Directory receiving one `id u v` file per patch.
    #[arg(long)]
    uv_dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
pub enum RefineThreshold {
    Auto,
    Length(f64),
}

fn parse_threshold(s: &str) -> Result<RefineThreshold, String> {
    if s == "auto" {
        return Ok(RefineThreshold::Auto);
    }
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(RefineThreshold::Length(x)),
        _ => Err(format!("expected 'auto' or a positive length, got '{s}'")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct RefineArgs {
    /// Longest interior edge allowed after refinement, or `auto` for the
    /// mean boundary edge of each patch.
    #[arg(long, default_value = "auto", value_parser = parse_threshold)]
    refine_threshold: RefineThreshold,

    /// Bisection rounds; 0 disables refinement.
    #[arg(long, default_value_t = surfatlas::refine::DEFAULT_REFINE_ROUNDS)]
    refine_rounds: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RemeshCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    atlas: AtlasArgs,
    #[command(flatten)]
    refine: RefineArgs,

    /// Target edge length; defaults to the mean input edge length.
    #[arg(long)]
    size: Option<f64>,

    /// Remesher passes.
    #[arg(long, default_value_t = surfatlas::remesh::DEFAULT_PASSES)]
    passes: usize,

    /// Output mesh; a JSON summary is written next to it.
    #[arg(short, long)]
    output: PathBuf,

    /// Output format, overriding the extension.
    #[arg(long)]
    output_format: Option<String>,

    #[arg(long)]
    uv_dump: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ConvergenceCmd {
    #[arg(long, default_value = "mvc")]
    scheme: Scheme,

    /// Mesh family: structured or delaunay.
    #[arg(long, default_value = "delaunay")]
    mesh: MeshFamily,

    /// Grid resolutions.
    #[arg(long, value_delimiter = ',', default_values_t = surfatlas::verify::DEFAULT_LEVELS)]
    levels: Vec<usize>,

    #[arg(long, default_value_t = surfatlas::verify::DEFAULT_SEED)]
    seed: u64,

    /// CSV file of `n,h,l2,h1` rows.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct QualityCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    atlas: AtlasArgs,

    /// Include per-triangle values in the report.
    #[arg(long)]
    per_triangle: bool,

    /// Tagged model with conformity, sigma1 and sigma2 element data (msh).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct ErrorReport {
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
    patch: Option<usize>,
}

fn kind_of(e: &surfatlas::Error) -> &'static str {
    use surfatlas::Error::*;
    match e {
        Io { .. } => "io",
        Parse { .. } => "parse",
        NonFinite => "non-finite",
        EmptyMesh => "empty-mesh",
        InvalidTriangle { .. } => "invalid-triangle",
        NonManifold(_) => "non-manifold",
        InvalidArgument(_) => "invalid-argument",
        NoBoundary => "no-boundary",
        Degenerate(_) => "degenerate",
        PatchTooSmall(_) => "patch-too-small",
        SolverFailed { .. } => "solver",
        LocateFailed { .. } => "locate",
        BoundaryIntersection => "boundary-intersection",
        InconsistentBoundary(_) => "inconsistent-boundary",
        OutputCheck(_) => "output-check",
        Patch { source, .. } => kind_of(source),
    }
}

fn report(e: &anyhow::Error) -> ErrorBody {
    match e.downcast_ref::<surfatlas::Error>() {
        Some(err) => ErrorBody {
            kind: kind_of(err),
            message: err.to_string(),
            patch: match err {
                surfatlas::Error::Patch { patch, .. } => Some(*patch),
                _ => None,
            },
        },
        None => ErrorBody {
            kind: "other",
            message: format!("{e:#}"),
            patch: None,
        },
    }
}

fn emit(body: ErrorBody) {
    let text = serde_json::to_string(&ErrorReport { error: body }).expect("error report serializes");
    println!("{text}");
}

fn run(cli: Cli) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    match cli.command {
        Command::Info(a) => commands::info(&a),
        Command::Atlas(a) => commands::atlas(&a),
        Command::Remesh(a) => commands::remesh(&a),
        Command::Convergence(a) => commands::convergence(&a),
        Command::Quality(a) => commands::quality(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            emit(ErrorBody {
                kind: "usage",
                message: e.to_string().trim().to_string(),
                patch: None,
            });
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            emit(report(&e));
            ExitCode::FAILURE
        }
    }
}
