//! Seeded random pencils and sampling helpers.
//!
//! All draws use ChaCha8 seeded through `seed_from_u64`, so results are
//! identical across platforms.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, to_complex, CMatrix, CVector, LuFactor};
use crate::pencil::Pencil;
use crate::smoothers::jacobi;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn complex_normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

pub fn normal_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// `G + 2 sqrt(n) I` with standard normal `G`: nonsymmetric and safely nonsingular.
pub fn random_system(n: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let shift = 2.0 * (n as f64).sqrt();
    normal_matrix(n, n, &mut r) + DMatrix::identity(n, n) * shift
}

/// [`random_system`] paired with its Jacobi preconditioner.
pub fn random_pencil(n: usize, seed: u64) -> Pencil {
    let a = to_complex(&random_system(n, seed));
    let m = jacobi(&a).expect("shifted diagonal is nonzero");
    Pencil::with_smoother(a, m).expect("dimensions agree")
}

/// [`random_system`] with a dense nonsymmetric preconditioner `M = A + 0.8 H`.
pub fn random_dense_pencil(n: usize, seed: u64) -> Pencil {
    let a = random_system(n, seed);
    let mut r = rng(seed.wrapping_add(0x9e37_79b9));
    loop {
        let m = &a + normal_matrix(n, n, &mut r) * 0.8;
        if LuFactor::new(&to_complex(&m), 1e-8).is_some() {
            return Pencil::from_real(&a, &m).expect("M checked above");
        }
    }
}

/// Eigenvalue block of a real spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumBlock {
    Real(f64),
    /// `re +/- i im`
    Pair(f64, f64),
}

/// Real pencil whose `M^{-1} A = S Lambda_R S^{-1}` has the prescribed spectrum.
///
/// `M` is a shifted random matrix and `S = I + 0.3 G / sqrt(n)`.
pub fn pencil_with_spectrum(blocks: &[SpectrumBlock], seed: u64) -> Pencil {
    let n: usize = blocks
        .iter()
        .map(|b| match b {
            SpectrumBlock::Real(_) => 1,
            SpectrumBlock::Pair(..) => 2,
        })
        .sum();
    let mut lam_r = DMatrix::zeros(n, n);
    let mut k = 0;
    for b in blocks {
        match *b {
            SpectrumBlock::Real(x) => {
                lam_r[(k, k)] = x;
                k += 1;
            }
            SpectrumBlock::Pair(re, im) => {
                lam_r[(k, k)] = re;
                lam_r[(k, k + 1)] = -im;
                lam_r[(k + 1, k)] = im;
                lam_r[(k + 1, k + 1)] = re;
                k += 2;
            }
        }
    }
    let mut r = rng(seed);
    let scale = 0.3 / (n as f64).sqrt();
    let s = DMatrix::identity(n, n) + normal_matrix(n, n, &mut r) * scale;
    let s_inv = s.clone().try_inverse().expect("near-identity basis");
    let m = normal_matrix(n, n, &mut r) + DMatrix::identity(n, n) * (2.0 * (n as f64).sqrt());
    let a = &m * &s * lam_r * s_inv;
    Pencil::from_real(&a, &m).expect("M is diagonally shifted")
}

/// `(diag(lambdas), I)`.
pub fn diagonal_pencil(lambdas: &[f64]) -> Pencil {
    let a = DMatrix::from_diagonal(&DVector::from_column_slice(lambdas));
    let n = lambdas.len();
    Pencil::from_real(&a, &DMatrix::identity(n, n)).expect("identity M")
}

/// Real standard normal vector lifted to complex.
pub fn normal_cvector(n: usize, rng: &mut ChaCha8Rng) -> CVector {
    crate::linalg::to_complex_vec(&normal_vector(n, rng))
}
