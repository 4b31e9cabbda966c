use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, ProblemKind, Rhs, SmootherKind};

#[derive(Debug, Parser)]
#[command(name = "spectl", version, about = "Optimal two-level transfer experiments on matrix pencils")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ordered generalized eigenvalues, deviations |1 - lambda| and cond(V_r).
    Spectrum(CommonArgs),
    /// Runs the named theory checks on one pencil and coarse dimension.
    Verify(CommonArgs),
    /// One CSV row of bounds, norms and measured factors per coarse dimension.
    Sweep(CommonArgs),
    /// Iterates the two-level cycle and reports per-seed histories.
    Run(CommonArgs),
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Spectrum(a) | Command::Verify(a) | Command::Sweep(a) | Command::Run(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,

    /// Grid refinement level for advection and wave problems.
    #[arg(long)]
    pub refinement: Option<u32>,

    /// Time step of the wave problem.
    #[arg(long)]
    pub dt: Option<f64>,

    /// Elements per side (laplacian) or matrix size (random).
    #[arg(long)]
    pub size: Option<usize>,

    /// Seed of the random problem.
    #[arg(long)]
    pub pencil_seed: Option<u64>,

    #[arg(long, value_enum)]
    pub smoother: Option<SmootherKind>,

    /// Strength threshold of the CF split.
    #[arg(long)]
    pub theta: Option<f64>,

    /// Contiguous block size for block smoothers, replacing the problem's natural blocks.
    #[arg(long)]
    pub block_size: Option<usize>,

    /// Coarse dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nc: Option<Vec<usize>>,

    /// Coarse dimensions as fractions of n, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nc_frac: Option<Vec<f64>>,

    #[arg(long)]
    pub nu1: Option<usize>,

    #[arg(long)]
    pub nu2: Option<usize>,

    /// Real-valued transfers (real pencils only).
    #[arg(long)]
    pub real: bool,

    /// Start-vector seeds: `0..10`, `7` or `1,2,5`.
    #[arg(long)]
    pub seeds: Option<String>,

    #[arg(long)]
    pub k_cap: Option<usize>,

    /// Relative residual stop; 0 always runs k_cap cycles.
    #[arg(long)]
    pub rtol: Option<f64>,

    #[arg(long, value_enum)]
    pub rhs: Option<Rhs>,

    #[arg(long)]
    pub rhs_seed: Option<u64>,

    /// Random competitor transfers drawn by `verify`.
    #[arg(long)]
    pub competitors: Option<usize>,

    /// Zero the last column of P before verifying (negative fixture).
    #[arg(long)]
    pub corrupt_transfers: bool,

    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format of `spectrum`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Matrix Market file holding A.
    #[arg(long)]
    pub mtx_a: Option<PathBuf>,

    /// Matrix Market file holding M; the smoother builds M otherwise.
    #[arg(long)]
    pub mtx_m: Option<PathBuf>,
}
