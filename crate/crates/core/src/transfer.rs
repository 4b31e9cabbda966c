//! Optimal transfer operators, coarse basis changes, and the `N`-norm family.
//!
//! The optimal interpolation `P#` spans the first `n_c` right generalized
//! eigenvectors and the optimal restriction `R#` the first `n_c` left ones.
//! For real pencils a real basis of the same ranges is built directly from
//! each conjugate pair `v`: `Re v + Im v` and `Re v - Im v`.
//!
//! Norms are taken in the family induced by `N = V_r^{-*} D^* D V_r^{-1}` for
//! nonzero diagonal `D`; in every such norm the coarse projection built from
//! `(P#, R#)` is orthogonal.

use serde::Serialize;

use crate::error::{Error, Result, Warning};
use crate::linalg::{
    c, cholesky_lower, column_rank, hermitian_part, max_abs, CMatrix, LuFactor, C64, PIVOT_FLOOR,
};
use crate::pencil::{Field, GeneralizedEigenDecomposition};

/// Imaginary residue (relative to the column scale) tolerated when emitting real columns.
pub const REAL_RESIDUE_TOL: f64 = 1e-10;

/// Interpolation `P` and restriction `R` (applied as `R^*`), both `n x n_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferPair {
    p: CMatrix,
    r: CMatrix,
    field: Field,
}

impl TransferPair {
    pub fn new(p: CMatrix, r: CMatrix) -> Result<Self> {
        if p.shape() != r.shape() {
            return Err(Error::DimensionMismatch(format!(
                "P is {:?}, R is {:?}",
                p.shape(),
                r.shape()
            )));
        }
        let (n, n_c) = p.shape();
        if n_c == 0 || n_c > n {
            return Err(Error::BadCoarseDim { n_c, n });
        }
        let field = Field::of(&p).join(Field::of(&r));
        Ok(Self { p, r, field })
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_c(&self) -> usize {
        self.p.ncols()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Numerical column ranks of `(P, R)`.
    pub fn ranks(&self) -> (usize, usize) {
        (column_rank(&self.p, 1e-12), column_rank(&self.r, 1e-12))
    }

    pub fn has_full_rank(&self) -> bool {
        let (rp, rr) = self.ranks();
        rp == self.n_c() && rr == self.n_c()
    }
}

fn check_coarse_dim(n_c: usize, n: usize) -> Result<()> {
    if n_c == 0 || n_c > n {
        return Err(Error::BadCoarseDim { n_c, n });
    }
    Ok(())
}

/// `P# = V_r[:, ..n_c]`, `R# = V_l[:, ..n_c]` in deviation order.
pub fn optimal_complex_transfers(
    ged: &GeneralizedEigenDecomposition,
    n_c: usize,
) -> Result<TransferPair> {
    check_coarse_dim(n_c, ged.n())?;
    Ok(TransferPair {
        p: ged.v_r().columns(0, n_c).into_owned(),
        r: ged.v_l().columns(0, n_c).into_owned(),
        field: Field::Complex,
    })
}

/// Real-valued optimal transfers and the coarse dimension actually used.
#[derive(Debug, Clone)]
pub struct RealTransfers {
    pub pair: TransferPair,
    pub effective_n_c: usize,
    pub warnings: Vec<Warning>,
}

fn column_scale(m: &CMatrix, j: usize) -> f64 {
    m.column(j)
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()))
        .max(f64::MIN_POSITIVE)
}

fn real_columns(v: &CMatrix, count: usize, ged: &GeneralizedEigenDecomposition) -> Result<CMatrix> {
    let n = v.nrows();
    let lambdas = ged.lambdas();
    let mut out = CMatrix::zeros(n, count);
    let mut j = 0;
    while j < count {
        let scale = column_scale(v, j);
        if lambdas[j].im == 0.0 {
            let residue = v.column(j).iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs())) / scale;
            if residue > REAL_RESIDUE_TOL {
                return Err(Error::ResidualImaginary { column: j, residue });
            }
            out.set_column(j, &v.column(j).map(|z| c(z.re, 0.0)));
            j += 1;
            continue;
        }
        if !ged.starts_pair(j) {
            return Err(Error::ResidualImaginary {
                column: j,
                residue: lambdas[j].im.abs(),
            });
        }
        let residue = (0..n)
            .map(|i| (v[(i, j + 1)] - v[(i, j)].conj()).norm())
            .fold(0.0_f64, f64::max)
            / scale;
        if residue > REAL_RESIDUE_TOL {
            return Err(Error::ResidualImaginary {
                column: j + 1,
                residue,
            });
        }
        for i in 0..n {
            let z = v[(i, j)];
            out[(i, j)] = c(z.re + z.im, 0.0);
            out[(i, j + 1)] = c(z.re - z.im, 0.0);
        }
        j += 2;
    }
    Ok(out)
}

/// Real basis for the ranges of `P#` and `R#` on a real pencil.
///
/// When `n_c` would separate a conjugate pair, the coarse space grows by one
/// and a [`Warning::PairSplit`] is attached.
pub fn optimal_real_transfers(
    ged: &GeneralizedEigenDecomposition,
    n_c: usize,
) -> Result<RealTransfers> {
    if ged.field() != Field::Real {
        return Err(Error::NotRealPencil);
    }
    let n = ged.n();
    check_coarse_dim(n_c, n)?;
    let mut warnings = Vec::new();
    let effective_n_c = if ged.starts_pair(n_c - 1) {
        log::warn!("coarse dimension {n_c} splits a conjugate pair; using {}", n_c + 1);
        warnings.push(Warning::PairSplit {
            requested: n_c,
            effective: n_c + 1,
        });
        n_c + 1
    } else {
        n_c
    };
    let p = real_columns(ged.v_r(), effective_n_c, ged)?;
    let r = real_columns(ged.v_l(), effective_n_c, ged)?;
    Ok(RealTransfers {
        pair: TransferPair {
            p,
            r,
            field: Field::Real,
        },
        effective_n_c,
        warnings,
    })
}

/// Invertible coarse change-of-basis pair `(B_P, B_R)`.
#[derive(Debug, Clone)]
pub struct BasisChange {
    b_p: CMatrix,
    b_r: CMatrix,
}

impl BasisChange {
    pub fn new(b_p: CMatrix, b_r: CMatrix) -> Result<Self> {
        if !b_p.is_square() || b_p.shape() != b_r.shape() {
            return Err(Error::DimensionMismatch(format!(
                "B_P is {:?}, B_R is {:?}",
                b_p.shape(),
                b_r.shape()
            )));
        }
        if LuFactor::new(&b_p, PIVOT_FLOOR).is_none() || LuFactor::new(&b_r, PIVOT_FLOOR).is_none()
        {
            return Err(Error::SingularBasisChange);
        }
        Ok(Self { b_p, b_r })
    }

    pub fn b_p(&self) -> &CMatrix {
        &self.b_p
    }

    pub fn b_r(&self) -> &CMatrix {
        &self.b_r
    }
}

/// `(P B_P, R B_R)`; the coarse projection is unchanged.
pub fn apply_basis_change(tp: &TransferPair, bc: &BasisChange) -> Result<TransferPair> {
    if bc.b_p.nrows() != tp.n_c() {
        return Err(Error::DimensionMismatch(format!(
            "basis change of size {} for coarse dimension {}",
            bc.b_p.nrows(),
            tp.n_c()
        )));
    }
    TransferPair::new(tp.p() * &bc.b_p, tp.r() * &bc.b_r)
}

/// Diagonal `D` defining `N = (D V_r^{-1})^* (D V_r^{-1})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormSpec {
    d: Vec<C64>,
    real_mode: bool,
}

impl NormSpec {
    pub fn identity(n: usize) -> Self {
        Self {
            d: vec![c(1.0, 0.0); n],
            real_mode: false,
        }
    }

    pub fn new(d: Vec<C64>, real_mode: bool) -> Result<Self> {
        if let Some(i) = d.iter().position(|z| *z == C64::default() || !z.is_finite()) {
            return Err(Error::InvalidNormSpec(format!("d[{i}] = {} must be nonzero", d[i])));
        }
        if real_mode {
            if let Some(i) = d.iter().position(|z| z.im != 0.0 || z.re <= 0.0) {
                return Err(Error::InvalidNormSpec(format!(
                    "real mode needs positive real d, d[{i}] = {}",
                    d[i]
                )));
            }
        }
        Ok(Self { d, real_mode })
    }

    pub fn d(&self) -> &[C64] {
        &self.d
    }

    pub fn real_mode(&self) -> bool {
        self.real_mode
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Checks the dimension and, in real mode, equal weights on conjugate pairs.
    pub fn validate_for(&self, ged: &GeneralizedEigenDecomposition) -> Result<()> {
        if self.dim() != ged.n() {
            return Err(Error::DimensionMismatch(format!(
                "norm spec has {} weights, pencil has size {}",
                self.dim(),
                ged.n()
            )));
        }
        if self.real_mode {
            for i in 0..ged.n().saturating_sub(1) {
                if ged.starts_pair(i) && self.d[i] != self.d[i + 1] {
                    return Err(Error::InvalidNormSpec(format!(
                        "conjugate pair at {i} needs equal weights"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `N = (D V_r^{-1})^* (D V_r^{-1})`, Hermitian positive definite.
pub fn n_norm_matrix(spec: &NormSpec, ged: &GeneralizedEigenDecomposition) -> Result<CMatrix> {
    spec.validate_for(ged)?;
    let mut x = ged.v_r_inv().clone();
    for (i, &d) in spec.d().iter().enumerate() {
        x.row_mut(i).scale_mut(d.norm());
        // a unimodular factor on the row cancels in X^* X
    }
    finish_norm_matrix(x.adjoint() * x)
}

/// `N = V_r^{-*} G V_r^{-1}` for an arbitrary Hermitian positive definite `G`.
pub fn norm_matrix_from_gram(ged: &GeneralizedEigenDecomposition, gram: &CMatrix) -> Result<CMatrix> {
    if gram.shape() != (ged.n(), ged.n()) {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix is {:?}, pencil has size {}",
            gram.shape(),
            ged.n()
        )));
    }
    finish_norm_matrix(ged.v_r_inv().adjoint() * gram * ged.v_r_inv())
}

fn finish_norm_matrix(n: CMatrix) -> Result<CMatrix> {
    let n = hermitian_part(&n);
    if cholesky_lower(&n).is_none() {
        return Err(Error::CholeskyFailure);
    }
    Ok(n)
}

/// Self-adjointness defect `||N Pi - Pi^* N||_max` of `Pi` in the `N` inner product.
pub fn check_pi_orthogonal(pi: &CMatrix, n: &CMatrix) -> Result<f64> {
    if !pi.is_square() || pi.shape() != n.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Pi is {:?}, N is {:?}",
            pi.shape(),
            n.shape()
        )));
    }
    Ok(max_abs(&(n * pi - pi.adjoint() * n)))
}

/// Largest off-block entry of `V_r^* N V_r` for the CF split at `n_c`.
pub fn cf_block_defect(ged: &GeneralizedEigenDecomposition, n: &CMatrix, n_c: usize) -> f64 {
    let g = ged.v_r().adjoint() * n * ged.v_r();
    let size = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..size {
        for j in 0..size {
            if (i < n_c) != (j < n_c) {
                worst = worst.max(g[(i, j)].norm());
            }
        }
    }
    worst
}
