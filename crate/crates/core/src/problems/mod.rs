//! Test pencils and external matrix I/O.
//!
//! The PDE generators are finite-difference analogues on the unit square:
//! an upwind advection-reaction operator (nonsymmetric, inflow rows
//! eliminated) and a midpoint-rule step of the mixed wave equation
//! (skew-dominated, weak boundary penalty).

pub mod advection;
pub mod laplacian;
pub mod matrix_market;
pub mod random;
pub mod wave;

use std::path::PathBuf;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{real_part, max_imag};
use crate::smoothers::BlockPartition;

pub use advection::{advection_reaction_matrix, AdvectionParams, AdvectionSystem, Velocity};
pub use laplacian::hpd_laplacian;
pub use matrix_market::{load_matrix_market, save_matrix_market};
pub use wave::{mixed_wave_matrix, WaveParams};

/// Element counts of a uniform `nx x ny` grid on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2x2 elements, got {nx}x{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    /// `nx = ny = 2 * 2^r`.
    pub fn advection(refinement: u32) -> Self {
        let n = 2usize << refinement;
        Self { nx: n, ny: n }
    }

    /// `nx = ny = 3 * 2^r`.
    pub fn wave(refinement: u32) -> Self {
        let n = 3usize << refinement;
        Self { nx: n, ny: n }
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }
}

/// Characteristic function of `[lo, hi]`.
pub(crate) fn indicator(x: f64, interval: (f64, f64)) -> f64 {
    if x >= interval.0 && x <= interval.1 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    AdvectionReaction {
        grid: GridSpec,
        params: AdvectionParams,
    },
    MixedWave {
        grid: GridSpec,
        dt: f64,
        params: WaveParams,
    },
    Laplacian {
        grid: GridSpec,
    },
    /// Dense random system with a dominant diagonal.
    Random {
        n: usize,
        seed: u64,
    },
    External {
        path: PathBuf,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::AdvectionReaction { .. } => "advection",
            ProblemSpec::MixedWave { .. } => "wave",
            ProblemSpec::Laplacian { .. } => "laplacian",
            ProblemSpec::Random { .. } => "random",
            ProblemSpec::External { .. } => "external",
        }
    }

    /// Real system matrix `A`. External complex matrices are rejected here;
    /// load them with [`load_matrix_market`] instead.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            ProblemSpec::AdvectionReaction { grid, params } => {
                Ok(advection_reaction_matrix(*grid, params).matrix)
            }
            ProblemSpec::MixedWave { grid, dt, params } => mixed_wave_matrix(*grid, *dt, params),
            ProblemSpec::Laplacian { grid } => Ok(hpd_laplacian(*grid)),
            ProblemSpec::Random { n, seed } => Ok(random::random_system(*n, *seed)),
            ProblemSpec::External { path } => {
                let m = load_matrix_market(path)?;
                if max_imag(&m) != 0.0 {
                    return Err(Error::UnsupportedField(
                        "complex matrix where a real one is required".into(),
                    ));
                }
                Ok(real_part(&m))
            }
        }
    }

    /// Blocks used by block smoothers: the three unknowns of a wave node,
    /// 2x2 node patches on the scalar grids, contiguous pairs otherwise.
    pub fn natural_blocks(&self, n: usize) -> Result<BlockPartition> {
        match self {
            ProblemSpec::MixedWave { .. } => BlockPartition::contiguous(n, 3),
            ProblemSpec::AdvectionReaction { grid, params } => {
                let sys = advection_reaction_matrix(*grid, params);
                patch_blocks(&sys.nodes, n)
            }
            ProblemSpec::Laplacian { grid } => {
                let m = grid.nx - 1;
                let nodes: Vec<(usize, usize)> =
                    (0..m).flat_map(|j| (0..m).map(move |i| (i, j))).collect();
                patch_blocks(&nodes, n)
            }
            _ => BlockPartition::contiguous(n, 2),
        }
    }
}

fn patch_blocks(nodes: &[(usize, usize)], n: usize) -> Result<BlockPartition> {
    let mut keys: Vec<(usize, usize)> = nodes.iter().map(|&(i, j)| (j / 2, i / 2)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut blocks = vec![Vec::new(); keys.len()];
    for (idx, &(i, j)) in nodes.iter().enumerate() {
        let b = keys
            .binary_search(&(j / 2, i / 2))
            .expect("key collected above");
        blocks[b].push(idx);
    }
    BlockPartition::new(blocks, n)
}
