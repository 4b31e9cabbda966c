//! Shared fixtures for the benchmarks in `benches/`.

use spectl_core::linalg::to_complex;
use spectl_core::problems::advection::{advection_reaction_matrix, AdvectionParams};
use spectl_core::problems::wave::{mixed_wave_matrix, WaveParams};
use spectl_core::problems::GridSpec;
use spectl_core::smoothers::{jacobi, red_black_jacobi, rs_cf_split, DEFAULT_THETA};
use spectl_core::Pencil;

/// Advection-reaction at refinement `r` with point Jacobi.
pub fn advection_jacobi(r: u32) -> Pencil {
    let a = to_complex(&advection_reaction_matrix(GridSpec::advection(r), &AdvectionParams::default()).matrix);
    let m = jacobi(&a).expect("advection diagonal is nonzero");
    Pencil::with_smoother(a, m).expect("shapes agree")
}

/// Advection-reaction at refinement `r` with red-black Jacobi.
pub fn advection_rb(r: u32) -> Pencil {
    let a = to_complex(&advection_reaction_matrix(GridSpec::advection(r), &AdvectionParams::default()).matrix);
    let split = rs_cf_split(&a, DEFAULT_THETA);
    let m = red_black_jacobi(&a, &split, None).expect("point red-black is invertible");
    Pencil::with_smoother(a, m).expect("shapes agree")
}

/// Mixed wave step at refinement `r` with point Jacobi.
pub fn wave_jacobi(r: u32, dt: f64) -> Pencil {
    let a = to_complex(&mixed_wave_matrix(GridSpec::wave(r), dt, &WaveParams::default()).expect("dt is positive"));
    let m = jacobi(&a).expect("wave diagonal is nonzero");
    Pencil::with_smoother(a, m).expect("shapes agree")
}
