use bibee::bem::MeshFormat;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

/// Electrostatic solvation energies: Kirkwood, BIBEE, GB and boundary elements.
///
/// Exit codes: 0 success, 2 usage, 3 input parse/topology/io, 4 domain or
/// precondition violation, 5 numerical failure (non-convergence, consistency).
#[derive(Debug, Parser)]
#[command(name = "bibee", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file; flags override its values, which override defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Spherical-harmonic truncation order.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,

    /// Interior (solute) dielectric constant.
    #[arg(long, global = true)]
    pub eps_in: Option<f64>,

    /// Exterior (solvent) dielectric constant.
    #[arg(long, global = true)]
    pub eps_out: Option<f64>,

    /// Output file (stdout when omitted). The run manifest goes to `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic energies for charges in a spherical cavity.
    Sphere(SphereArgs),
    /// Boundary-element energies on a triangulated surface.
    Bem(BemArgs),
    /// Compare methods on random sphere configurations.
    Experiment(ExperimentArgs),
    /// Sweep the BIBEE/M eigenvalue estimate over a λ grid.
    Sweep(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct ChargeArgs {
    /// PQR file with charges.
    #[arg(long, conflicts_with = "charge")]
    pub pqr: Option<PathBuf>,

    /// Inline charge `x,y,z,q` (Å, e); repeat for more.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "pqr")]
    pub charge: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SphereArgs {
    #[command(flatten)]
    pub charges: ChargeArgs,

    /// Sphere radius (Å).
    #[arg(long)]
    pub radius: Option<f64>,

    /// Comma-separated methods, e.g. `kirkwood,cfa,p,m(-0.2),gbeps`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,

    /// λ for `lambda` and `m` when given without a value.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,

    /// Keep the truncation order fixed instead of raising it to meet the error bound.
    #[arg(long)]
    pub no_escalate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Args)]
pub struct BemArgs {
    #[command(flatten)]
    pub charges: ChargeArgs,

    /// Mesh file: `.off`, or an MSMS `.vert`/`.face` file or stem.
    #[arg(long, required_unless_present = "icosphere")]
    pub mesh: Option<PathBuf>,

    /// Mesh format (guessed from the extension when omitted).
    #[arg(long)]
    pub mesh_format: Option<MeshFormat>,

    /// Use a refined icosahedron (20·4^LEVEL panels) of `--radius` instead of a mesh.
    #[arg(long, conflicts_with = "mesh")]
    pub icosphere: Option<u32>,

    /// Icosphere radius (Å).
    #[arg(long)]
    pub radius: Option<f64>,

    /// Comma-separated methods: bem-exact, bem-cfa, bem-p, bem-lambda(λ), bem-m(λ).
    #[arg(long, value_delimiter = ',', default_value = "bem-exact")]
    pub methods: Vec<String>,

    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,

    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,

    /// GMRES relative residual target.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,

    #[arg(long, default_value_t = 50)]
    pub restart: usize,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Number of random configurations.
    #[arg(long)]
    pub num_configs: Option<usize>,

    /// Comma-separated methods compared against Kirkwood.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,

    /// Comma-separated λ grid for `sweep`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda_grid: Vec<f64>,
}
