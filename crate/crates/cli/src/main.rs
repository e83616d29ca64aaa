//! `curlgrid`: batch front end for mesh generation, map reconstruction and
//! the uniqueness checks.
//!
//! Exit status is 0 on success, 2 for input errors, 3 when a Poisson solve
//! fails and 4 for a folded target.

mod commands;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curlgrid::optimizer::OptimizerConfig;
use curlgrid::poisson::{Backend, SolverConfig};

#[derive(Parser)]
#[command(name = "curlgrid", version, about = "Grid transformations with prescribed Jacobian determinant and curl")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a PGM image into a monitor (f0 from intensity, zero curl target).
    Image2monitor(Image2MonitorArgs),
    /// Minimize the monitor functional from the identity and write the mesh.
    Generate(GenerateArgs),
    /// Recover a map from its own Jacobian determinant (and curl).
    Reconstruct(ReconstructArgs),
    /// Evaluate the inequality chain on random zero-boundary fields.
    Check(CheckArgs),
    /// Tabulate the analytic bound sequence.
    Bounds(BoundsArgs),
    /// Run the fixed-point map u <- Δ⁻¹∇F(u) from a seed.
    FixedPoint(FixedPointArgs),
    /// Convert an FLD1 mesh or scalar field to legacy VTK.
    ExportVtk(ExportVtkArgs),
}

#[derive(Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Spectral,
    Sor,
}

#[derive(Args)]
pub struct OptimizerArgs {
    /// Initial control scale.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 500)]
    pub max_outer: usize,
    /// Relative decrease of the functional below which the run stops.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = BackendArg::Spectral)]
    pub backend: BackendArg,
    /// Sweep cap for the SOR backend.
    #[arg(long)]
    pub max_sweeps: Option<usize>,
}

impl OptimizerArgs {
    pub fn config(&self) -> OptimizerConfig {
        let solver = match self.backend {
            BackendArg::Spectral => SolverConfig::default(),
            BackendArg::Sor => SolverConfig {
                backend: Backend::Sor,
                max_iterations: self.max_sweeps,
                ..SolverConfig::sor()
            },
        };
        OptimizerConfig {
            step_sigma: self.sigma,
            max_outer: self.max_outer,
            ssd_rel_tol: self.tol,
            solver,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Args)]
pub struct Image2MonitorArgs {
    /// P2 or P5 image.
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = curlgrid::monitor::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = 65)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Keep the curl term active when the monitor is used.
    #[arg(long)]
    pub use_curl: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Path to a monitor.toml.
    #[arg(long)]
    pub monitor: PathBuf,
    /// Expected lattice size; rejected if it differs from the monitor's.
    #[arg(long)]
    pub n: Option<usize>,
    /// Enable the curl term even if the monitor has it off.
    #[arg(long)]
    pub use_curl: bool,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct ReconstructArgs {
    /// Target map as an FLD1 position field.
    #[arg(long, conflicts_with = "sine", required_unless_present = "sine")]
    pub t0: Option<PathBuf>,
    /// Use the built-in target id + A·(sin πx sin 2πy, sin 2πx sin πy) with amplitude A.
    #[arg(long)]
    pub sine: Option<f64>,
    /// Lattice size for the built-in target.
    #[arg(long, default_value_t = 33)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub use_curl: bool,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 33)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub epsilon: f64,
    /// Poincaré constant.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    pub c: Option<f64>,
    /// Take C from the discrete Laplacian on an N-point lattice.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct FixedPointArgs {
    /// `zero`, `triple:<ε>` (max of the norm triple) or `sup:<a>` (max nodal value).
    #[arg(long, default_value = "triple:0.1")]
    pub init: String,
    #[arg(long, default_value_t = 17)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 40)]
    pub m_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct ExportVtkArgs {
    /// FLD1 file: a position field (mesh) or a scalar field on the identity mesh.
    #[arg(long)]
    pub input: PathBuf,
    /// Destination .vtk file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Image2monitor(a) => commands::image2monitor(a),
        Command::Generate(a) => commands::generate(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Check(a) => commands::check(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::FixedPoint(a) => commands::fixed_point(a),
        Command::ExportVtk(a) => commands::export_vtk(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("curlgrid: {failure}");
            failure.exit_code()
        }
    }
}
