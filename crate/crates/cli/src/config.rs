//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! [problem]
//! kind = "advection"     # advection | wave | laplacian | random | external
//! refinement = 1
//!
//! [smoother]
//! kind = "rb_jacobi"     # jacobi | block_jacobi | rb_jacobi | block_rb_jacobi
//!
//! [cycle]
//! nu1 = 1
//! nu2 = 1
//! nc_frac = [0.1, 0.2, 0.3]
//!
//! [iteration]
//! seeds = [0, 1, 2]
//! ```
//!
//! Relative matrix paths in a config file resolve against the file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::ValueEnum;
use serde::Deserialize;

use spectl_core::smoothers::DEFAULT_THETA;

use crate::cli::CommonArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Advection,
    Wave,
    Laplacian,
    Random,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SmootherKind {
    Jacobi,
    BlockJacobi,
    RbJacobi,
    BlockRbJacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Rhs {
    /// `b = A x_true` with random `x_true`.
    Manufactured,
    /// `b = 0`; residuals decay without a roundoff floor.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    problem: ProblemSection,
    #[serde(default)]
    smoother: SmootherSection,
    #[serde(default)]
    cycle: CycleSection,
    #[serde(default)]
    iteration: IterationSection,
    #[serde(default)]
    norm: NormSection,
    #[serde(default)]
    verify: VerifySection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    kind: Option<ProblemKind>,
    refinement: Option<u32>,
    dt: Option<f64>,
    size: Option<usize>,
    seed: Option<u64>,
    mtx_a: Option<PathBuf>,
    mtx_m: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SmootherSection {
    kind: Option<SmootherKind>,
    theta: Option<f64>,
    block_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CycleSection {
    nu1: Option<usize>,
    nu2: Option<usize>,
    nc: Option<Vec<usize>>,
    nc_frac: Option<Vec<f64>>,
    real: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IterationSection {
    seeds: Option<Vec<u64>>,
    k_cap: Option<usize>,
    rtol: Option<f64>,
    rhs: Option<Rhs>,
    rhs_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormSection {
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifySection {
    competitors: Option<usize>,
    basis_changes: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    path: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemConfig {
    Advection { refinement: u32 },
    Wave { refinement: u32, dt: f64 },
    Laplacian { size: usize },
    Random { size: usize, seed: u64 },
    External { a: PathBuf, m: Option<PathBuf> },
}

/// Coarse dimensions as requested, before resolving against `n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoarseRequest {
    pub nc: Vec<usize>,
    pub nc_frac: Vec<f64>,
}

impl CoarseRequest {
    pub fn is_empty(&self) -> bool {
        self.nc.is_empty() && self.nc_frac.is_empty()
    }

    /// Sorted, deduplicated coarse dimensions; fractions round to the nearest integer.
    pub fn resolve(&self, n: usize) -> anyhow::Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.nc.len() + self.nc_frac.len());
        for &k in &self.nc {
            if k == 0 || k > n {
                bail!("n_c = {k} outside 1..={n}");
            }
            out.push(k);
        }
        for &f in &self.nc_frac {
            let k = ((f * n as f64).round() as usize).clamp(1, n);
            out.push(k);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub smoother: SmootherKind,
    pub theta: f64,
    pub block_size: Option<usize>,
    pub nu1: usize,
    pub nu2: usize,
    pub coarse: CoarseRequest,
    pub real: bool,
    pub seeds: Vec<u64>,
    pub k_cap: usize,
    pub rtol: f64,
    pub rhs: Rhs,
    pub rhs_seed: u64,
    pub norm_weights: Option<Vec<f64>>,
    pub competitors: usize,
    pub basis_changes: usize,
    pub verify_seed: u64,
    pub corrupt_transfers: bool,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// `0..10`, `3` or `0,4,7`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|e| format!("bad seed range start: {e}"))?;
        let hi: u64 = hi.trim().parse().map_err(|e| format!("bad seed range end: {e}"))?;
        if hi <= lo {
            return Err(format!("empty seed range {lo}..{hi}"));
        }
        return Ok((lo..hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("bad seed '{t}': {e}")))
        .collect()
}

fn read_file(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn rebase(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

impl RunConfig {
    /// Merges the optional config file with flags (flags win) and validates the result.
    pub fn from_args(args: &CommonArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let base = args.config.as_deref().and_then(Path::parent);
        let fp = file.problem;

        let mtx_a = args.mtx_a.clone().or_else(|| fp.mtx_a.map(|p| rebase(base, p)));
        let mtx_m = args.mtx_m.clone().or_else(|| fp.mtx_m.map(|p| rebase(base, p)));
        let kind = match (args.problem.or(fp.kind), &mtx_a) {
            (Some(k), _) => k,
            (None, Some(_)) => ProblemKind::External,
            (None, None) => bail!("no problem given; use --problem or --mtx-a"),
        };
        let refinement = args.refinement.or(fp.refinement);
        let size = args.size.or(fp.size);
        let problem = match kind {
            ProblemKind::Advection => ProblemConfig::Advection {
                refinement: refinement.unwrap_or(1),
            },
            ProblemKind::Wave => ProblemConfig::Wave {
                refinement: refinement.unwrap_or(0),
                dt: args.dt.or(fp.dt).unwrap_or(0.1),
            },
            ProblemKind::Laplacian => ProblemConfig::Laplacian {
                size: size.unwrap_or(6),
            },
            ProblemKind::Random => ProblemConfig::Random {
                size: size.unwrap_or(6),
                seed: args.pencil_seed.or(fp.seed).unwrap_or(42),
            },
            ProblemKind::External => ProblemConfig::External {
                a: mtx_a.clone().context("external problem needs --mtx-a")?,
                m: mtx_m.clone(),
            },
        };
        if kind != ProblemKind::External && (mtx_a.is_some() || mtx_m.is_some()) {
            bail!("--mtx-a/--mtx-m only apply to external problems");
        }

        let cycle = file.cycle;
        let coarse = if args.nc.is_some() || args.nc_frac.is_some() {
            CoarseRequest {
                nc: args.nc.clone().unwrap_or_default(),
                nc_frac: args.nc_frac.clone().unwrap_or_default(),
            }
        } else {
            CoarseRequest {
                nc: cycle.nc.unwrap_or_default(),
                nc_frac: cycle.nc_frac.unwrap_or_default(),
            }
        };

        let it = file.iteration;
        let seeds = match &args.seeds {
            Some(s) => parse_seeds(s).map_err(anyhow::Error::msg)?,
            None => it.seeds.unwrap_or_else(|| (0..10).collect()),
        };

        let cfg = RunConfig {
            problem,
            smoother: args.smoother.or(file.smoother.kind).unwrap_or(SmootherKind::Jacobi),
            theta: args.theta.or(file.smoother.theta).unwrap_or(DEFAULT_THETA),
            block_size: args.block_size.or(file.smoother.block_size),
            nu1: args.nu1.or(cycle.nu1).unwrap_or(1),
            nu2: args.nu2.or(cycle.nu2).unwrap_or(1),
            coarse,
            real: args.real || cycle.real.unwrap_or(false),
            seeds,
            k_cap: args.k_cap.or(it.k_cap).unwrap_or(20),
            rtol: args.rtol.or(it.rtol).unwrap_or(1e-10),
            rhs: args.rhs.or(it.rhs).unwrap_or(Rhs::Manufactured),
            rhs_seed: args.rhs_seed.or(it.rhs_seed).unwrap_or(0),
            norm_weights: file.norm.weights,
            competitors: args.competitors.or(file.verify.competitors).unwrap_or(100),
            basis_changes: file.verify.basis_changes.unwrap_or(10),
            verify_seed: file.verify.seed.unwrap_or(0),
            corrupt_transfers: args.corrupt_transfers,
            out: args.out.clone().or(file.output.path),
            format: args.format.or(file.output.format),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        match &self.problem {
            ProblemConfig::Wave { dt, .. } if !(*dt > 0.0 && dt.is_finite()) => {
                bail!("dt must be positive, got {dt}")
            }
            ProblemConfig::Laplacian { size } if *size < 2 => {
                bail!("laplacian size must be at least 2, got {size}")
            }
            ProblemConfig::Random { size, .. } if *size == 0 => bail!("random size must be positive"),
            ProblemConfig::Advection { refinement } | ProblemConfig::Wave { refinement, .. }
                if *refinement > 6 =>
            {
                bail!("refinement {refinement} is too large for dense factorizations")
            }
            _ => {}
        }
        if let Some(f) = self.coarse.nc_frac.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            bail!("n_c fraction {f} outside (0, 1]");
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            bail!("theta must lie in (0, 1], got {}", self.theta);
        }
        if self.block_size == Some(0) {
            bail!("block size must be positive");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if self.k_cap == 0 {
            bail!("k_cap must be at least 1");
        }
        if self.rtol.is_nan() || self.rtol < 0.0 {
            bail!("rtol must be non-negative, got {}", self.rtol);
        }
        if let Some(w) = &self.norm_weights {
            if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                bail!("norm weights must be positive and finite");
            }
        }
        Ok(())
    }

    pub fn problem_label(&self) -> String {
        match &self.problem {
            ProblemConfig::Advection { refinement } => format!("advection r={refinement}"),
            ProblemConfig::Wave { refinement, dt } => format!("wave r={refinement} dt={dt}"),
            ProblemConfig::Laplacian { size } => format!("laplacian {size}x{size}"),
            ProblemConfig::Random { size, seed } => format!("random n={size} seed={seed}"),
            ProblemConfig::External { a, m } => match m {
                Some(m) => format!("external A={} M={}", a.display(), m.display()),
                None => format!("external A={}", a.display()),
            },
        }
    }
}
