//! Optimal two-level transfer operators for general matrix pencils.
//!
//! Given a linear system `A x = b` and a fine-space preconditioner `M`, the
//! generalized eigenvectors of the pencil `(A, M)` define interpolation and
//! restriction operators that are optimal for a two-level method with
//! relaxation `x <- x + M^{-1}(b - A x)`. This crate builds those operators
//! (complex and real-valued), assembles the resulting two-level error
//! propagators, and evaluates the quantities used to check the convergence
//! theory: spectral radii, norms in the family induced by
//! `N = V_r^{-*} D^* D V_r^{-1}`, geometric averages of powers, and measured
//! convergence factors from actual iterations.
//!
//! Everything is dense and aimed at desk-scale problems (a few thousand
//! unknowns at most).
//!
//! Module map:
//!
//! * [`pencil`]: the `(A, M)` pencil and its ordered generalized eigendecomposition.
//! * [`transfer`]: optimal transfer pairs, basis changes, and the `N`-norm matrix.
//! * [`two_level`]: coarse projection, error propagator, norms, bounds and iterations.
//! * [`smoothers`]: Jacobi, block Jacobi, red-black Jacobi and the Ruge-Stuben CF split.
//! * [`problems`]: test pencils (advection-reaction, mixed wave, Laplacian, random) and Matrix Market I/O.
//! * [`checks`]: a named suite of theorem checks run against one configured pencil.

pub mod checks;
pub mod error;
pub mod linalg;
pub mod pencil;
pub mod problems;
pub mod smoothers;
pub mod transfer;
pub mod two_level;

pub use error::{Error, Result, Warning};
pub use linalg::{CMatrix, CVector, C64};
pub use pencil::{
    deviation_order, factor_pencil, verify_biorthogonality, BiorthogonalityReport, Field,
    GeneralizedEigenDecomposition, Pencil,
};
pub use smoothers::{BlockPartition, CFSplit, Color, Smoother};
pub use transfer::{
    apply_basis_change, check_pi_orthogonal, n_norm_matrix, optimal_complex_transfers,
    optimal_real_transfers, BasisChange, NormSpec, RealTransfers, TransferPair,
};
pub use two_level::{
    coarse_projection, error_propagator, n_norm_of, power_norm_check, predicted_bound,
    run_iterations, spectral_radius, ConvergenceRecord, IterationProblem, IterationSettings,
    TwoLevelOperator,
};
