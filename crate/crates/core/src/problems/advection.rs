//! Steady advection-reaction `b . grad u + c0 u = f` by first-order upwinding.
//!
//! Nodes sit on the `(nx + 1) x (ny + 1)` lattice of the unit square. Nodes on
//! inflow sides (`b . n < 0`) carry Dirichlet data and are eliminated; their
//! couplings are reported in [`AdvectionSystem::boundary_coupling`]. A small
//! artificial diffusion `eps = kappa_p * h * max|b| / 2` adds the downwind
//! coupling that pure upwinding lacks; without it the operator is triangular
//! with repeated diagonal entries and generally not diagonalizable.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{indicator, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Velocity {
    /// `b = (cos^2(pi y), cos^2(pi x))`.
    Rotating,
    Constant(f64, f64),
    Zero,
}

impl Velocity {
    pub fn at(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            Velocity::Rotating => ((PI * y).cos().powi(2), (PI * x).cos().powi(2)),
            Velocity::Constant(bx, by) => (bx, by),
            Velocity::Zero => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvectionParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub interval: (f64, f64),
    pub velocity: Velocity,
    /// Scales the stabilizing diffusion; zero gives pure upwinding.
    pub kappa_p: f64,
}

impl Default for AdvectionParams {
    fn default() -> Self {
        Self {
            alpha0: 0.1,
            alpha1: 0.9,
            interval: (0.25, 0.75),
            velocity: Velocity::Rotating,
            kappa_p: 1.0,
        }
    }
}

impl AdvectionParams {
    /// `c0(x, y) = alpha0 + alpha1 chi_I(x) chi_I(y)`.
    pub fn reaction(&self, x: f64, y: f64) -> f64 {
        self.alpha0 + self.alpha1 * indicator(x, self.interval) * indicator(y, self.interval)
    }
}

#[derive(Debug, Clone)]
pub struct AdvectionSystem {
    pub matrix: DMatrix<f64>,
    /// Per row, the sum of coefficients moved to the right-hand side.
    pub boundary_coupling: DVector<f64>,
    /// Lattice position `(i, j)` of each unknown.
    pub nodes: Vec<(usize, usize)>,
    /// Reaction coefficient at each unknown.
    pub reaction: Vec<f64>,
    pub diffusion: f64,
}

pub fn advection_reaction_matrix(grid: GridSpec, params: &AdvectionParams) -> AdvectionSystem {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let coord = |i: usize, j: usize| (i as f64 * hx, j as f64 * hy);

    let is_dirichlet = |i: usize, j: usize| {
        let (x, y) = coord(i, j);
        let (bx, by) = params.velocity.at(x, y);
        (i == 0 && bx > 0.0) || (i == nx && bx < 0.0) || (j == 0 && by > 0.0) || (j == ny && by < 0.0)
    };

    let mut index = vec![vec![usize::MAX; ny + 1]; nx + 1];
    let mut nodes = Vec::new();
    // row-major numbering over a column-indexed table
    #[allow(clippy::needless_range_loop)]
    for j in 0..=ny {
        for i in 0..=nx {
            if !is_dirichlet(i, j) {
                index[i][j] = nodes.len();
                nodes.push((i, j));
            }
        }
    }

    let bmax = (0..=nx)
        .flat_map(|i| (0..=ny).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (x, y) = coord(i, j);
            let (bx, by) = params.velocity.at(x, y);
            bx.abs().max(by.abs())
        })
        .fold(0.0, f64::max);
    let eps = params.kappa_p * hx.max(hy) * bmax / 2.0;

    let n = nodes.len();
    let mut a = DMatrix::zeros(n, n);
    let mut coupling = DVector::zeros(n);
    let mut reaction = Vec::with_capacity(n);

    for (row, &(i, j)) in nodes.iter().enumerate() {
        let (x, y) = coord(i, j);
        let (bx, by) = params.velocity.at(x, y);
        let c0 = params.reaction(x, y);
        reaction.push(c0);
        a[(row, row)] += c0;

        let mut couple = |ii: usize, jj: usize, value: f64| {
            a[(row, row)] -= value;
            match index[ii][jj] {
                usize::MAX => coupling[row] += value,
                col => a[(row, col)] += value,
            }
        };

        if bx > 0.0 {
            couple(i - 1, j, -bx / hx);
        } else if bx < 0.0 {
            couple(i + 1, j, bx / hx);
        }
        if by > 0.0 {
            couple(i, j - 1, -by / hy);
        } else if by < 0.0 {
            couple(i, j + 1, by / hy);
        }

        if eps > 0.0 {
            if i > 0 {
                couple(i - 1, j, -eps / (hx * hx));
            }
            if i < nx {
                couple(i + 1, j, -eps / (hx * hx));
            }
            if j > 0 {
                couple(i, j - 1, -eps / (hy * hy));
            }
            if j < ny {
                couple(i, j + 1, -eps / (hy * hy));
            }
        }
    }

    AdvectionSystem {
        matrix: a,
        boundary_coupling: coupling,
        nodes,
        reaction,
        diffusion: eps,
    }
}
