//! The pencil `(A, M)` and its ordered generalized eigendecomposition.
//!
//! Right eigenvectors come from `W = M^{-1} A`; left eigenvectors are not
//! solved for independently but defined as `V_l = M^{-*} V_r^{-*}`, which
//! pairs them with the right ones and fixes `V_l^* M V_r = I` and
//! `V_l^* A V_r = diag(lambda)`.
//!
//! Eigenvalues are sorted by deviation `|1 - lambda|`, largest first: the
//! leading columns are the modes relaxation handles worst.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result, Warning};
use crate::linalg::{
    c, cholesky_lower, cond2, eig, hermitian_eig, is_hermitian, is_real, max_abs, to_complex,
    CMatrix, LuFactor, C64, PIVOT_FLOOR,
};
use crate::smoothers::Smoother;

/// `cond_2(V_r)` above which results carry an ill-conditioning warning.
pub const COND_WARNING_THRESHOLD: f64 = 1e12;

/// Relative threshold for treating an eigenvalue of a real pencil as real.
pub const TOL_IMAG: f64 = 1e-12;

/// Imaginary parts up to this (relative) size may be rounded onto the real axis
/// when no conjugate partner exists.
const UNPAIRED_IMAG_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn of(m: &CMatrix) -> Self {
        if is_real(m) {
            Field::Real
        } else {
            Field::Complex
        }
    }

    pub fn join(self, other: Field) -> Field {
        if self == Field::Real && other == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

/// A square system matrix `A` together with its fine-space preconditioner `M`.
#[derive(Debug, Clone)]
pub struct Pencil {
    a: CMatrix,
    smoother: Smoother,
    field: Field,
}

impl Pencil {
    pub fn new(a: CMatrix, m: CMatrix) -> Result<Self> {
        Self::check_dims(&a, &m)?;
        let smoother = Smoother::new(m, "M")?;
        Self::with_smoother(a, smoother)
    }

    pub fn with_smoother(a: CMatrix, smoother: Smoother) -> Result<Self> {
        Self::check_dims(&a, smoother.matrix())?;
        let field = Field::of(&a).join(Field::of(smoother.matrix()));
        Ok(Self { a, smoother, field })
    }

    pub fn from_real(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Self> {
        Self::new(to_complex(a), to_complex(m))
    }

    fn check_dims(a: &CMatrix, m: &CMatrix) -> Result<()> {
        if !a.is_square() || a.nrows() == 0 || a.shape() != m.shape() {
            return Err(Error::DimensionMismatch(format!(
                "A is {:?}, M is {:?}; both must be square, nonempty and equal",
                a.shape(),
                m.shape()
            )));
        }
        Ok(())
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn m(&self) -> &CMatrix {
        self.smoother.matrix()
    }

    pub fn smoother(&self) -> &Smoother {
        &self.smoother
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// `A` Hermitian and `M` Hermitian positive definite.
    pub fn is_hermitian_definite(&self) -> bool {
        is_hermitian(&self.a, 1e-14)
            && is_hermitian(self.m(), 1e-14)
            && cholesky_lower(self.m()).is_some()
    }
}

/// Ordered right/left generalized eigenvectors and eigenvalues of a pencil.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenDecomposition {
    v_r: CMatrix,
    v_l: CMatrix,
    v_r_inv: CMatrix,
    lambdas: Vec<C64>,
    ordering: Vec<usize>,
    cond_vr: f64,
    field: Field,
    warnings: Vec<Warning>,
}

impl GeneralizedEigenDecomposition {
    pub fn v_r(&self) -> &CMatrix {
        &self.v_r
    }

    pub fn v_l(&self) -> &CMatrix {
        &self.v_l
    }

    /// `V_r^{-1}`, equal to `V_l^* M` up to round-off.
    pub fn v_r_inv(&self) -> &CMatrix {
        &self.v_r_inv
    }

    pub fn lambdas(&self) -> &[C64] {
        &self.lambdas
    }

    /// Permutation applied to the eigensolver's raw output.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn cond_vr(&self) -> f64 {
        self.cond_vr
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// `|1 - lambda_i|` in order.
    pub fn deviations(&self) -> Vec<f64> {
        self.lambdas.iter().map(|&l| deviation(l)).collect()
    }

    /// True when `lambdas[i]` is the `+Im` member of a conjugate pair whose
    /// partner sits at `i + 1`.
    pub fn starts_pair(&self, i: usize) -> bool {
        self.field == Field::Real
            && i + 1 < self.lambdas.len()
            && self.lambdas[i].im > 0.0
            && self.lambdas[i + 1] == self.lambdas[i].conj()
    }
}

#[inline]
pub fn deviation(lambda: C64) -> f64 {
    (c(1.0, 0.0) - lambda).norm()
}

fn compare_deviation(a: C64, b: C64) -> Ordering {
    deviation(b)
        .total_cmp(&deviation(a))
        .then(a.re.total_cmp(&b.re))
        .then(b.im.total_cmp(&a.im))
}

/// Permutation sorting `lambdas` by `|1 - lambda|` descending.
///
/// Ties go to smaller real part, then larger imaginary part, so exact
/// conjugate pairs land next to each other with `+Im` first. The sort is
/// stable, hence fully deterministic.
pub fn deviation_order(lambdas: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lambdas.len()).collect();
    idx.sort_by(|&i, &j| compare_deviation(lambdas[i], lambdas[j]));
    idx
}

#[derive(Debug, Clone, Copy)]
enum Unit {
    Single(usize),
    /// `(+Im member, -Im member)`
    Pair(usize, usize),
}

impl Unit {
    fn key(self) -> usize {
        match self {
            Unit::Single(i) | Unit::Pair(i, _) => i,
        }
    }
}

fn tol_imag(lambda: C64) -> f64 {
    TOL_IMAG * lambda.norm().max(1.0)
}

/// Scale a column so its largest-magnitude entry is real and positive.
fn normalize_phase(col: &mut nalgebra::DVectorViewMut<'_, C64>) {
    let mut best = C64::default();
    for z in col.iter() {
        if z.norm() > best.norm() {
            best = *z;
        }
    }
    if best.norm() > 0.0 {
        let phase = best / best.norm();
        for z in col.iter_mut() {
            *z *= phase.conj();
        }
    }
}

fn normalize_column(v: &mut CMatrix, j: usize) {
    let mut col = v.column_mut(j);
    let nrm = col.norm();
    if nrm > 0.0 {
        col.unscale_mut(nrm);
    }
    normalize_phase(&mut col);
}

/// Group eigenvalues of a real pencil into real singletons and exact
/// conjugate pairs, cleaning both values and vectors in place.
fn pair_real_spectrum(
    lambdas: &mut [C64],
    vectors: &mut CMatrix,
    warnings: &mut Vec<Warning>,
) -> Result<Vec<Unit>> {
    let n = lambdas.len();
    let pos: Vec<usize> = (0..n).filter(|&i| lambdas[i].im > tol_imag(lambdas[i])).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| lambdas[i].im < -tol_imag(lambdas[i])).collect();

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for &p in &pos {
        for &q in &neg {
            candidates.push(((lambdas[p] - lambdas[q].conj()).norm(), p, q));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut partner = vec![usize::MAX; n];
    for (_, p, q) in candidates {
        if partner[p] == usize::MAX && partner[q] == usize::MAX {
            partner[p] = q;
            partner[q] = p;
        }
    }

    let mut units = Vec::with_capacity(n);
    for i in 0..n {
        let lam = lambdas[i];
        if partner[i] != usize::MAX {
            if lam.im > 0.0 {
                units.push(Unit::Pair(i, partner[i]));
            }
            continue;
        }
        if lam.im.abs() > UNPAIRED_IMAG_SLACK * lam.norm().max(1.0) {
            return Err(Error::UnpairedConjugate {
                re: lam.re,
                im: lam.im,
            });
        }
        lambdas[i] = c(lam.re, 0.0);
        let col = vectors.column(i);
        let scale = col.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let residue = col.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs())) / scale.max(f64::MIN_POSITIVE);
        if residue > 1e-8 {
            log::warn!("eigenvector {i} of a real eigenvalue had imaginary residue {residue:.3e}");
            warnings.push(Warning::TruncatedImaginary { column: i, residue });
        }
        for z in vectors.column_mut(i).iter_mut() {
            z.im = 0.0;
        }
        normalize_column(vectors, i);
        units.push(Unit::Single(i));
    }

    for unit in &units {
        if let Unit::Pair(p, q) = *unit {
            let mean = (lambdas[p] + lambdas[q].conj()) * 0.5;
            lambdas[p] = mean;
            lambdas[q] = mean.conj();

            // Align the partner's phase with conj(v_p) before averaging.
            let vp = vectors.column(p).into_owned();
            let vq = vectors.column(q).into_owned();
            let overlap: C64 = vp.iter().zip(vq.iter()).map(|(a, b)| a * b).sum();
            let phase = if overlap.norm() > 0.0 {
                overlap / overlap.norm()
            } else {
                c(1.0, 0.0)
            };
            let averaged = (vp + vq.map(|z| (z * phase.conj()).conj())) * c(0.5, 0.0);
            vectors.set_column(p, &averaged);
            normalize_column(vectors, p);
            let conj = vectors.column(p).map(|z| z.conj());
            vectors.set_column(q, &conj);
        }
    }
    Ok(units)
}

/// Generalized eigendecomposition of `(A, M)` in deviation order.
pub fn factor_pencil(pencil: &Pencil) -> Result<GeneralizedEigenDecomposition> {
    let n = pencil.n();
    let mut warnings = Vec::new();

    let hermitian_definite = pencil.is_hermitian_definite();
    let (mut lambdas, mut vectors) = if hermitian_definite {
        hermitian_definite_eig(pencil)?
    } else {
        let w = pencil.smoother().solve(pencil.a());
        eig(&w)?
    };
    for j in 0..n {
        normalize_column(&mut vectors, j);
    }

    let mut units = match pencil.field() {
        Field::Real => pair_real_spectrum(&mut lambdas, &mut vectors, &mut warnings)?,
        Field::Complex => (0..n).map(Unit::Single).collect(),
    };
    units.sort_by(|x, y| compare_deviation(lambdas[x.key()], lambdas[y.key()]));
    let ordering: Vec<usize> = units
        .iter()
        .flat_map(|u| match *u {
            Unit::Single(i) => vec![i],
            Unit::Pair(p, q) => vec![p, q],
        })
        .collect();

    let lambdas: Vec<C64> = ordering.iter().map(|&i| lambdas[i]).collect();
    let mut v_r = vectors.select_columns(&ordering);

    let vr_lu = LuFactor::new(&v_r, PIVOT_FLOOR).ok_or(Error::DefectiveEigenbasis)?;
    let mut v_r_inv = vr_lu.inverse();
    let m_adj = LuFactor::new(&pencil.m().adjoint(), PIVOT_FLOOR).ok_or(Error::SingularM)?;
    let mut v_l = m_adj.solve(&v_r_inv.adjoint());

    // Balance column norms of the paired families; D_m = I is preserved.
    // Conjugate pairs share one factor so they stay exactly conjugate.
    let mut j = 0;
    while j < n {
        let width = if lambdas[j].im > 0.0 && pencil.field() == Field::Real { 2 } else { 1 };
        let nr = v_r.column(j).norm();
        let nl = v_l.column(j).norm();
        if nr > 0.0 && nl > 0.0 {
            let s = (nl / nr).sqrt();
            for k in j..j + width {
                v_r.column_mut(k).scale_mut(s);
                v_l.column_mut(k).unscale_mut(s);
                v_r_inv.row_mut(k).unscale_mut(s);
            }
        }
        j += width;
    }
    if hermitian_definite {
        // M-orthonormal right eigenvectors are their own left partners.
        v_l = v_r.clone();
    }

    let field = pencil.field();
    if field == Field::Real {
        let mut j = 0;
        while j < n {
            if lambdas[j].im == 0.0 {
                for z in v_l.column_mut(j).iter_mut() {
                    z.im = 0.0;
                }
                j += 1;
            } else {
                let avg = (v_l.column(j) + v_l.column(j + 1).map(|z| z.conj())) * c(0.5, 0.0);
                v_l.set_column(j, &avg);
                v_l.set_column(j + 1, &avg.map(|z| z.conj()));
                j += 2;
            }
        }
    }

    let cond_vr = cond2(&v_r);
    if cond_vr > COND_WARNING_THRESHOLD {
        log::warn!("eigenvector matrix is ill-conditioned (cond {cond_vr:.3e})");
        warnings.push(Warning::IllConditionedEigenbasis { cond: cond_vr });
    }

    Ok(GeneralizedEigenDecomposition {
        v_r,
        v_l,
        v_r_inv,
        lambdas,
        ordering,
        cond_vr,
        field,
        warnings,
    })
}

/// Eigenpairs of `M^{-1} A` through `L^{-1} A L^{-*}` with `M = L L^*`,
/// giving `M`-orthonormal eigenvectors even inside repeated eigenvalues.
fn hermitian_definite_eig(pencil: &Pencil) -> Result<(Vec<C64>, CMatrix)> {
    let n = pencil.n();
    let l = cholesky_lower(pencil.m()).ok_or(Error::SingularM)?;
    let l_inv = l
        .solve_lower_triangular(&CMatrix::identity(n, n))
        .ok_or(Error::SingularM)?;
    let congruent = &l_inv * pencil.a() * l_inv.adjoint();
    let congruent = crate::linalg::hermitian_part(&congruent);
    let (values, q) = hermitian_eig(&congruent)?;
    let vectors = l_inv.adjoint() * q;
    Ok((values.into_iter().map(|x| c(x, 0.0)).collect(), vectors))
}

/// Defects of the pairing relations `V_l^* A V_r = diag(lambda)` and `V_l^* M V_r = I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiorthogonalityReport {
    pub offdiag_a: f64,
    pub offdiag_m: f64,
    pub diag_a_defect: f64,
    pub diag_m_defect: f64,
}

impl BiorthogonalityReport {
    pub fn max_defect(&self) -> f64 {
        self.offdiag_a
            .max(self.offdiag_m)
            .max(self.diag_a_defect)
            .max(self.diag_m_defect)
    }
}

pub fn verify_biorthogonality(
    ged: &GeneralizedEigenDecomposition,
    pencil: &Pencil,
) -> Result<BiorthogonalityReport> {
    if ged.n() != pencil.n() {
        return Err(Error::DimensionMismatch(format!(
            "decomposition has size {}, pencil {}",
            ged.n(),
            pencil.n()
        )));
    }
    let vl_adj = ged.v_l().adjoint();
    let ga = &vl_adj * pencil.a() * ged.v_r();
    let gm = &vl_adj * pencil.m() * ged.v_r();
    let n = ged.n();
    let mut report = BiorthogonalityReport {
        offdiag_a: 0.0,
        offdiag_m: 0.0,
        diag_a_defect: 0.0,
        diag_m_defect: 0.0,
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                report.diag_a_defect = report.diag_a_defect.max((ga[(i, i)] - ged.lambdas[i]).norm());
                report.diag_m_defect = report.diag_m_defect.max((gm[(i, i)] - c(1.0, 0.0)).norm());
            } else {
                report.offdiag_a = report.offdiag_a.max(ga[(i, j)].norm());
                report.offdiag_m = report.offdiag_m.max(gm[(i, j)].norm());
            }
        }
    }
    Ok(report)
}

/// `||A V_r - M V_r diag(lambda)||_F / ||A||_F`.
pub fn reconstruction_residual(ged: &GeneralizedEigenDecomposition, pencil: &Pencil) -> f64 {
    let lam = crate::linalg::diag(ged.lambdas());
    let resid = pencil.a() * ged.v_r() - pencil.m() * ged.v_r() * lam;
    resid.norm() / pencil.a().norm().max(f64::MIN_POSITIVE)
}

/// Largest entry magnitude of `A`, floored at one; scales absolute tolerances.
pub fn a_scale(pencil: &Pencil) -> f64 {
    max_abs(pencil.a()).max(1.0)
}
