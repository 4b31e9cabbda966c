//! One midpoint-rule step of the first-order wave system
//! `u_t + c div p = 0`, `p_t + grad u = 0`.
//!
//! Unknowns are collocated at the `(nx + 1) x (ny + 1)` lattice nodes and
//! ordered node by node as `(u, p_x, p_y)`. Central differences with zero
//! extension outside the domain make `D_x`, `D_y` skew, so `grad = -div^T`.
//! The step matrix is
//!
//! ```text
//! [ I + dt kappa_p / h B    (dt c / 2) div ]
//! [ (dt / 2) grad            I             ]
//! ```
//!
//! with `B` the indicator of boundary nodes (weak Dirichlet penalty on `u`).

use nalgebra::DMatrix;

use super::{indicator, GridSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WaveParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub interval: (f64, f64),
    pub kappa_p: f64,
    /// Replaces the piecewise wave speed with a constant.
    pub constant_speed: Option<f64>,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self {
            alpha0: 0.1,
            alpha1: 0.9,
            interval: (0.2, 0.8),
            kappa_p: 1.0,
            constant_speed: None,
        }
    }
}

impl WaveParams {
    pub fn speed(&self, x: f64, y: f64) -> f64 {
        match self.constant_speed {
            Some(c) => c,
            None => {
                self.alpha0
                    + self.alpha1 * indicator(x, self.interval) * indicator(y, self.interval)
            }
        }
    }
}

pub fn mixed_wave_matrix(grid: GridSpec, dt: f64, params: &WaveParams) -> Result<DMatrix<f64>> {
    if dt.is_nan() || dt < 0.0 || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be >= 0, got {dt}")));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let nodes = (nx + 1) * (ny + 1);
    let n = 3 * nodes;
    let mut a = DMatrix::identity(n, n);

    let half = dt / 2.0;
    let penalty = dt * params.kappa_p / hx.min(hy);

    for j in 0..=ny {
        for i in 0..=nx {
            let k = node(i, j);
            let (u, px, py) = (3 * k, 3 * k + 1, 3 * k + 2);
            let c = params.speed(i as f64 * hx, j as f64 * hy);

            if i == 0 || i == nx || j == 0 || j == ny {
                a[(u, u)] += penalty;
            }

            // (D_x)_{k,l}: +1/(2h) toward i+1, -1/(2h) toward i-1
            let mut stencil: Vec<(usize, f64, bool)> = Vec::with_capacity(4);
            if i < nx {
                stencil.push((node(i + 1, j), 1.0 / (2.0 * hx), true));
            }
            if i > 0 {
                stencil.push((node(i - 1, j), -1.0 / (2.0 * hx), true));
            }
            if j < ny {
                stencil.push((node(i, j + 1), 1.0 / (2.0 * hy), false));
            }
            if j > 0 {
                stencil.push((node(i, j - 1), -1.0 / (2.0 * hy), false));
            }

            for (l, w, along_x) in stencil {
                let p_col = if along_x { 3 * l + 1 } else { 3 * l + 2 };
                a[(u, p_col)] += half * c * w;
                let p_row = if along_x { px } else { py };
                a[(p_row, 3 * l)] += half * w;
            }
        }
    }
    Ok(a)
}
