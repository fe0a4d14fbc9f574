#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod manifest;
mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "polaron", version, about = "Strong-coupling polaron and bipolaron calculations")]
pub struct Cli {
    /// Directory for results and manifests.
    #[arg(long, global = true, default_value = "polaron-out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for every random choice (optimizer restarts, Lanczos start vectors).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// key = value file with one [section] per command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pekar constant from a refinement ladder.
    Cp(CpArgs),
    /// Bipolaron upper bound at one repulsion strength.
    Pt(PtArgs),
    /// Binding curve over U and the threshold estimate.
    Phase(PhaseArgs),
    /// Coherent-state bounds at finite coupling and cutoff.
    Coherent(CoherentArgs),
    /// Gross-transformation constants.
    Gross(GrossArgs),
    /// Truncated Fock-space dispersion checks.
    Fock(FockArgs),
}

#[derive(Debug, Args)]
pub struct CpArgs {
    /// Comma-separated spacings, coarse to fine.
    #[arg(long)]
    pub spacing_ladder: Option<String>,
    #[arg(long = "box")]
    pub box_radius: Option<f64>,
    #[arg(long)]
    pub mixing: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PtArgs {
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub basis_size: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Evaluate this stored ansatz instead of optimizing.
    #[arg(long)]
    pub ansatz: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Comma-separated, strictly increasing U values.
    #[arg(long)]
    pub u_grid: Option<String>,
    #[arg(long)]
    pub basis_size: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub bisection_tol: Option<f64>,
    /// Also write an SVG chart of the binding curve.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct CoherentArgs {
    #[arg(long)]
    pub alpha: Option<String>,
    /// Comma-separated cutoffs; `inf` for none.
    #[arg(long)]
    pub kappa: Option<String>,
    /// `gaussian`, `pekar`, or a radial-function TSV file.
    #[arg(long)]
    pub phi: Option<String>,
    /// Product bipolaron at this U0 instead of the polaron.
    #[arg(long)]
    pub bipolaron_u0: Option<f64>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long = "box")]
    pub box_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GrossArgs {
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long = "K")]
    pub k_split: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
}

#[derive(Debug, Args)]
pub struct FockArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub u0: Option<f64>,
    /// Momenta separated by `;`, each `x` or `x,y,z`. Zero and the negatives
    /// are added.
    #[arg(long = "P")]
    pub p: Option<String>,
    #[arg(long)]
    pub lattice: Option<usize>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub shells: Option<usize>,
    #[arg(long)]
    pub per_shell: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Binding energy for the existence verdict (default: the toy binding).
    #[arg(long)]
    pub e_bin: Option<f64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
