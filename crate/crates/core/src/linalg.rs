//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! All pencil work happens in complex arithmetic; real problems are lifted
//! with [`to_complex`] and carry a field tag elsewhere.

use nalgebra::{linalg::SymmetricEigen, DMatrix, DVector, Hessenberg, LU, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative LU pivot floor: a pivot smaller than `PIVOT_FLOOR * max|a_ij|` counts as singular.
pub const PIVOT_FLOOR: f64 = 1e-13;

const EIG_MAX_SWEEPS_PER_ROW: usize = 1000;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn to_complex_vec(v: &DVector<f64>) -> CVector {
    v.map(|x| c(x, 0.0))
}

/// Real part; callers are expected to have checked [`max_imag`] first.
pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn max_imag(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.abs()))
}

/// 2-norm that neither underflows nor overflows for tiny or huge entries.
pub fn scaled_norm(v: &CVector) -> f64 {
    let s = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if s == 0.0 || !s.is_finite() {
        return s;
    }
    s * v.iter().map(|z| (z / s).norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

/// Partial-pivoting LU with a relative pivot floor.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl LuFactor {
    /// Factor `m`; `None` when a pivot falls below `floor * max|m_ij|`.
    pub fn new(m: &CMatrix, floor: f64) -> Option<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return None;
        }
        let scale = max_abs(m);
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        let lu = m.clone().lu();
        let u = lu.u();
        let min_pivot = u
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |acc, z| acc.min(z.norm()));
        if min_pivot <= floor * scale {
            return None;
        }
        Some(Self { lu, n: m.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        self.lu
            .solve(b)
            .expect("pivots were checked at factorization time")
    }

    pub fn solve_vec(&self, b: &CVector) -> CVector {
        self.lu
            .solve(b)
            .expect("pivots were checked at factorization time")
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&identity(self.n))
    }
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// 2-norm condition number `sigma_max / sigma_min` (infinite when singular).
pub fn cond2(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Numerical column rank with relative threshold `rtol` on singular values.
pub fn column_rank(m: &CMatrix, rtol: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * top).count()
}

/// Plane rotation `G = [c s; -conj(s) c]` with `G [x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let norm = ax.hypot(y.norm());
    if norm == 0.0 {
        (1.0, C64::default())
    } else if ax == 0.0 {
        (0.0, c(1.0, 0.0))
    } else {
        (ax / norm, (x / ax) * y.conj() / norm)
    }
}

/// Rows `k, k+1` of `m` over `cols` become `G [row_k; row_k+1]`.
fn rotate_rows(m: &mut CMatrix, k: usize, cs: f64, sn: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (a, b) = (m[(k, j)], m[(k + 1, j)]);
        m[(k, j)] = a * cs + sn * b;
        m[(k + 1, j)] = -sn.conj() * a + b * cs;
    }
}

/// Columns `k, k+1` of `m` over `rows` become `[col_k col_k+1] G^*`.
fn rotate_cols(m: &mut CMatrix, k: usize, cs: f64, sn: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let (a, b) = (m[(i, k)], m[(i, k + 1)]);
        m[(i, k)] = a * cs + b * sn.conj();
        m[(i, k + 1)] = -a * sn + b * cs;
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: C64, b: C64, cc: C64, d: C64) -> C64 {
    let p = (a - d) * 0.5;
    let bc = b * cc;
    let mut disc = (p * p + bc).sqrt();
    if (p.conj() * disc).re < 0.0 {
        disc = -disc;
    }
    let denom = p + disc;
    if denom.norm() == 0.0 {
        d
    } else {
        d - bc / denom
    }
}

/// Complex Schur form `m = Q T Q^*` by single-shift QR on the Hessenberg
/// form, with Wilkinson shifts and exceptional shifts on stagnation.
fn complex_schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = m.nrows();
    let (mut q, mut t) = Hessenberg::new(m.clone()).unpack();
    for i in 2..n {
        for j in 0..i - 1 {
            t[(i, j)] = C64::default();
        }
    }
    let eps = f64::EPSILON;
    let tiny = f64::MIN_POSITIVE * (n as f64) / eps;
    let max_iter = 30 * n.max(10);
    let mut hi = n.saturating_sub(1);
    let mut its = 0;
    let mut total = 0;
    while hi > 0 {
        // locate the active unreduced block [l, hi]
        let mut l = hi;
        while l > 0 {
            let sub = t[(l, l - 1)].norm();
            let scale = t[(l, l)].norm() + t[(l - 1, l - 1)].norm();
            if sub <= tiny || sub <= eps * scale {
                t[(l, l - 1)] = C64::default();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > max_iter * n.max(1) {
            return Err(Error::EigenSolverFailed);
        }
        let mu = if its % 10 == 0 && its % 20 != 0 {
            t[(l, l)] + 0.75 * t[(l + 1, l)].re.abs()
        } else if its % 20 == 0 {
            t[(hi, hi)] + 0.75 * t[(hi, hi - 1)].re.abs()
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        for k in l..hi {
            let (x, y) = if k == l {
                (t[(l, l)] - mu, t[(l + 1, l)])
            } else {
                (t[(k, k - 1)], t[(k + 1, k - 1)])
            };
            let (cs, sn) = givens(x, y);
            let first_col = if k == l { l } else { k - 1 };
            rotate_rows(&mut t, k, cs, sn, first_col..n);
            rotate_cols(&mut t, k, cs, sn, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut q, k, cs, sn, 0..n);
            if k > l {
                t[(k + 1, k - 1)] = C64::default();
            }
        }
    }
    Ok((q, t))
}

/// Eigenvalues of a general square complex matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of non-square matrix".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = complex_schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Eigenvalues and unit-norm right eigenvectors (columns) of a general square matrix.
///
/// Uses the complex Schur form `m = Q T Q^*` and back-substitution on the
/// triangular factor. Near-zero denominators are clamped to
/// `eps * ||T||_F`, so repeated eigenvalues still yield a triangular,
/// hence linearly independent, set of vectors.
pub fn eig(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eig of non-square matrix".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let (q, t) = complex_schur(m)?;
    let values: Vec<C64> = t.diagonal().iter().copied().collect();
    let smin = (f64::EPSILON * t.norm()).max(f64::MIN_POSITIVE);

    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let tkk = t[(k, k)];
        y[(k, k)] = c(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::default();
            for l in j + 1..=k {
                s += t[(j, l)] * y[(l, k)];
            }
            let mut d = t[(j, j)] - tkk;
            if d.norm() < smin {
                d = c(smin, 0.0);
            }
            y[(j, k)] = -s / d;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col.unscale_mut(nrm);
        }
    }
    Ok((values, vectors))
}

/// Hermitian eigendecomposition; eigenvalues ascending with orthonormal vectors.
pub fn hermitian_eig(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    let se = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_SWEEPS_PER_ROW * n.max(1))
        .ok_or(Error::EigenSolverFailed)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, j| se.eigenvectors[(r, idx[j])]);
    Ok((values, vectors))
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky_lower(m: &CMatrix) -> Option<CMatrix> {
    m.clone().cholesky().map(|ch| ch.l())
}

pub fn is_hermitian(m: &CMatrix, rtol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let n = m.nrows();
    (0..n).all(|i| (i..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= rtol * scale))
}

/// `(m + m^*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).unscale(2.0)
}

/// Orthonormal basis of the column space (thin QR).
pub fn orthonormal_basis(m: &CMatrix) -> CMatrix {
    m.clone().qr().q()
}

/// Sine of the largest principal angle between `range(a)` and `range(b)`.
///
/// Both inputs must have full column rank and the same number of columns.
pub fn subspace_sin_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    let qa = orthonormal_basis(a);
    let qb = orthonormal_basis(b);
    let residual = &qb - &qa * (qa.adjoint() * &qb);
    spectral_norm(&residual)
}

/// Match two multisets of complex numbers and return the largest matched distance.
///
/// Pairs are formed greedily in order of increasing distance, which is exact
/// whenever the true matching is well separated relative to the perturbation.
/// Returns `INFINITY` when the sizes differ.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        worst = worst.max(d);
        matched += 1;
        if matched == a.len() {
            break;
        }
    }
    worst
}
