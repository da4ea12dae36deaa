//! Flag definitions. Every flag has an explicit default (or is required) so
//! that a run is fully determined by its command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(
    name = "nalab",
    version,
    about = "Nonassociative field theory numerics: associators, torsion, regular charge"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normal form of φⁿ|ψ⟩ and its associator corrections
    Assoc(AssocArgs),
    /// Randomized torsion/contorsion identity suite
    TorsionCheck(TorsionArgs),
    /// Closed-form regular charge: field samples and energies
    Exact(ExactArgs),
    /// Shooting search for the regular starting value η*₀
    Shoot(ShootArgs),
    /// Integrate one trajectory and emit plot-ready profiles
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format [default depends on the subcommand]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssocArgs {
    /// Power n of the composite field φ = f.b (n ≥ 1)
    #[arg(long)]
    pub power: usize,
    /// Vacuum expectation ⟨ψ|φⁿ|ψ⟩ instead of the operator series
    #[arg(long)]
    pub vacuum: bool,
    /// Substitute a numeric associator constant m² (dimensionless)
    #[arg(long, value_name = "M2")]
    pub m2: Option<f64>,
    /// Print summation indices on every constituent
    #[arg(long)]
    pub indexed: bool,
    /// ASCII rendering (m^2, <core4>) instead of Unicode
    #[arg(long)]
    pub ascii: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TorsionArgs {
    /// Seed of the random instance stream
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of random (Γ, g, T) instances
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Evaluate trials one at a time instead of in parallel
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Charge q (charge units)
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub q: f64,
    /// Gravitational constant G
    #[arg(long = "G", default_value_t = 1.0)]
    pub g: f64,
    /// Speed of light c
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Inner cutoff of the self-energy integral (length units)
    #[arg(long, default_value = "1e-3")]
    pub rmin: f64,
    /// Radial sample grid a:b:n (length units) for CSV output
    #[arg(long, default_value = "1e-3:1e3:400")]
    pub grid: String,
    /// Space the grid linearly instead of logarithmically
    #[arg(long)]
    pub linear: bool,
    /// Absolute quadrature tolerance of the energy integrals
    #[arg(long, default_value = "1e-12")]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    /// Quartic coupling λ̃ = (c⁴/G)λ (dimensionless)
    #[arg(long)]
    pub lambda: f64,
    /// Associator mass m, m² = (G/c⁴)A₀² (dimensionless)
    #[arg(long)]
    pub m: f64,
    /// Series start radius ε (units of 1/√λ̃)
    #[arg(long, default_value = "1e-6")]
    pub eps: f64,
    /// Relative tolerance of the Dormand–Prince integrator
    #[arg(long, default_value = "1e-10")]
    pub rtol: f64,
    /// Absolute tolerance of the Dormand–Prince integrator
    #[arg(long, default_value = "1e-12")]
    pub atol: f64,
}

#[derive(Debug, Args)]
pub struct ShootArgs {
    #[command(flatten)]
    pub coupling: CouplingArgs,
    /// Starting-value bracket lo:hi for η₀
    #[arg(long, default_value = "0.2:2.0")]
    pub bracket: String,
    /// Bisection bracket width at which to stop
    #[arg(long, default_value = "1e-5")]
    pub tol: f64,
    /// Integration horizon (units of 1/√λ̃)
    #[arg(long, default_value_t = 80.0)]
    pub rmax: f64,
    /// Window lo:hi for the tail decay-rate fit (units of 1/√λ̃)
    #[arg(long, default_value = "30:60")]
    pub fit_window: String,
    /// Classify candidates one at a time instead of in parallel
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub coupling: CouplingArgs,
    /// Starting value η(0)
    #[arg(long, allow_negative_numbers = true)]
    pub eta0: f64,
    /// Output grid a:b:n (units of 1/√λ̃); b is the integration horizon
    #[arg(long, default_value = "1e-3:80:2000")]
    pub grid: String,
    /// Space the grid linearly instead of logarithmically
    #[arg(long)]
    pub linear: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}
