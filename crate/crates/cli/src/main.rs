//! `volpot` command-line frontend.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for numerical failures.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "volpot",
    version,
    about = "Volume potentials on curved triangle meshes"
)]
struct Cli {
    /// Worker threads for parallel phases (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a mesh file (and its staggered twin with --stagger).
    Mesh(MeshArgs),
    /// Evaluate the volume potential at interpolation nodes.
    Eval(EvalArgs),
    /// Far-rule error map around the standard simplex.
    Nfmap(NfmapArgs),
    /// Offloading sweep over far-rule orders.
    Bench(BenchArgs),
    /// Solve a Poisson problem with a manufactured solution.
    Poisson(PoissonArgs),
}

#[derive(Args, Debug, Clone)]
struct DomainArgs {
    /// Built-in domain: circle, ellipse or wobbly.
    #[arg(long, default_value = "circle")]
    domain: String,
    /// Spline boundary file with `t x y dx dy` lines (overrides --domain).
    #[arg(long)]
    spline: Option<PathBuf>,
    /// Target element size.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    h0: f64,
    /// Seed for the mesher's jittered retry.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grade element size by boundary curvature.
    #[arg(long)]
    size_field: bool,
    /// Gaussian scale a of the size field (default 4/h0²).
    #[arg(long, allow_negative_numbers = true)]
    size_a: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct OrderArgs {
    /// Tolerance ε in [1e-15, 1e-4].
    #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
    eps: f64,
    /// Far-field rule order (default 40, or 50 for ε ≤ 1e-14).
    #[arg(long)]
    nf: Option<usize>,
    /// Interpolation rule order.
    #[arg(long, default_value_t = 20)]
    ns: usize,
    /// Near-field subdivision rule order.
    #[arg(long, default_value_t = 12)]
    nn: usize,
    /// Gauss-Legendre points per self-interaction panel.
    #[arg(long, default_value_t = 16)]
    nl: usize,
    /// Radial rule order.
    #[arg(long, default_value_t = 8)]
    ng: usize,
    /// Near-field model.
    #[arg(long, value_enum, default_value_t = NearModel::Precise)]
    near_model: NearModel,
    /// Use the O(N²) direct sum instead of the FMM.
    #[arg(long)]
    direct: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum NearModel {
    Precise,
    Ball,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DensityArg {
    /// f = 1
    One,
    /// f = sin(x + 2y)
    Sin,
    /// f = exp(−x² − y²)
    Exp,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PoissonCase {
    /// g = sum of two Gaussians, f = ∇²g
    Gauss,
    /// g = (‖x‖² − 1)/4, f = 1
    Radial,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// Also write a staggered twin next to the output.
    #[arg(long)]
    stagger: bool,
    /// Output mesh file.
    #[arg(long, short, default_value = "mesh.txt")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    orders: OrderArgs,
    /// Quadrature mesh file (otherwise generated from the domain).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Interpolate on a staggered twin of the quadrature mesh.
    #[arg(long)]
    stagger: bool,
    #[arg(long, value_enum, default_value_t = DensityArg::One)]
    density: DensityArg,
    /// Node CSV `x y u`.
    #[arg(long, default_value = "nodes.csv")]
    out: PathBuf,
    /// Statistics JSON.
    #[arg(long, default_value = "stats.json")]
    stats: PathBuf,
}

#[derive(Args, Debug)]
struct NfmapArgs {
    /// Far-field rule order.
    #[arg(long, default_value_t = 20)]
    order: usize,
    /// Tolerance ε in [1e-15, 1e-4].
    #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = DensityArg::One)]
    density: DensityArg,
    /// Grid points per side over [−0.55, 1.55]².
    #[arg(long, default_value_t = 48)]
    grid: usize,
    /// CSV `x y log10_true_err in_model`.
    #[arg(long, default_value = "nfmap.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    orders: OrderArgs,
    /// Far-rule orders to sweep.
    #[arg(long, value_delimiter = ',', default_value = "12,20,33,40,50")]
    nf_list: Vec<usize>,
    #[arg(long, value_enum, default_value_t = DensityArg::One)]
    density: DensityArg,
    /// Interpolate on the quadrature mesh itself rather than a staggered twin.
    #[arg(long)]
    no_stagger: bool,
    /// Sweep CSV.
    #[arg(long, default_value = "offload.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PoissonArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    orders: OrderArgs,
    #[arg(long, value_enum, default_value_t = PoissonCase::Gauss)]
    case: PoissonCase,
    /// Boundary nodes (default: adaptive from 512).
    #[arg(long)]
    nb: Option<usize>,
    /// Interpolate on the quadrature mesh itself rather than a staggered twin.
    #[arg(long)]
    no_stagger: bool,
    /// CSV `x y phi err`.
    #[arg(long, default_value = "poisson.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let threads = cli.threads;
    match volpot::par::with_threads(threads, move || commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Numerical(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
