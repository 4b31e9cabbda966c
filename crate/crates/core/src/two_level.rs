//! Two-level operators: coarse projection, error propagator, norms, bounds and iterations.
//!
//! One V(nu1, nu2) cycle applies `nu1` relaxations `x <- x + M^{-1}(b - A x)`,
//! a coarse correction `x <- x + P (R^* A P)^{-1} R^* (b - A x)` and `nu2`
//! further relaxations. Its error propagator is
//! `E = (I - M^{-1} A)^{nu2} (I - Pi) (I - M^{-1} A)^{nu1}` with
//! `Pi = P (R^* A P)^{-1} R^* A`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_lower, eigenvalues, identity, max_abs, scaled_norm, spectral_norm, CMatrix, CVector, LuFactor, C64,
    PIVOT_FLOOR,
};
use crate::pencil::{deviation, Field, GeneralizedEigenDecomposition, Pencil};
use crate::problems::random::{complex_normal_matrix, normal_cvector, normal_matrix, rng};
use crate::transfer::{NormSpec, TransferPair};
use crate::linalg::to_complex;

/// Residual ratio treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e100;

/// Relative idempotency tolerance for `Pi`.
pub const IDEMPOTENCY_TOL: f64 = 1e-9;

/// Immutable two-level cycle for one pencil and one transfer pair.
#[derive(Debug, Clone)]
pub struct TwoLevelOperator {
    pencil: Pencil,
    transfers: TransferPair,
    nu1: usize,
    nu2: usize,
    coarse_factor: LuFactor,
}

fn coarse_factor(pencil: &Pencil, tp: &TransferPair) -> Result<LuFactor> {
    if tp.n() != pencil.n() {
        return Err(Error::DimensionMismatch(format!(
            "transfers act on size {}, pencil has size {}",
            tp.n(),
            pencil.n()
        )));
    }
    let coarse = tp.r().adjoint() * pencil.a() * tp.p();
    LuFactor::new(&coarse, PIVOT_FLOOR).ok_or(Error::SingularCoarseOperator)
}

impl TwoLevelOperator {
    pub fn new(pencil: Pencil, transfers: TransferPair, nu1: usize, nu2: usize) -> Result<Self> {
        let coarse_factor = coarse_factor(&pencil, &transfers)?;
        Ok(Self {
            pencil,
            transfers,
            nu1,
            nu2,
            coarse_factor,
        })
    }

    pub fn pencil(&self) -> &Pencil {
        &self.pencil
    }

    pub fn transfers(&self) -> &TransferPair {
        &self.transfers
    }

    pub fn nu1(&self) -> usize {
        self.nu1
    }

    pub fn nu2(&self) -> usize {
        self.nu2
    }

    pub fn n(&self) -> usize {
        self.pencil.n()
    }

    /// `X <- X - M^{-1} A X`, column by column.
    fn smooth_block(&self, x: &CMatrix) -> CMatrix {
        x - self.pencil.smoother().solve(&(self.pencil.a() * x))
    }

    /// `Pi X`.
    fn project_block(&self, x: &CMatrix) -> CMatrix {
        let rhs = self.transfers.r().adjoint() * (self.pencil.a() * x);
        self.transfers.p() * self.coarse_factor.solve(&rhs)
    }

    /// One cycle on `A x = b`, in place.
    pub fn cycle(&self, x: &mut CVector, b: &CVector) {
        let a = self.pencil.a();
        let relax = |x: &mut CVector| {
            let r = b - a * &*x;
            *x += self.pencil.smoother().apply(&r);
        };
        for _ in 0..self.nu1 {
            relax(x);
        }
        let r = b - a * &*x;
        let coarse = self.coarse_factor.solve_vec(&(self.transfers.r().adjoint() * r));
        *x += self.transfers.p() * coarse;
        for _ in 0..self.nu2 {
            relax(x);
        }
    }

    /// `E e` without assembling `E`.
    pub fn apply_error(&self, e: &CVector) -> CVector {
        let mut x = -e.clone();
        let b = CVector::zeros(e.len());
        self.cycle(&mut x, &b);
        -x
    }
}

/// Dense `Pi = P (R^* A P)^{-1} R^* A`, checked for idempotency.
pub fn coarse_projection(pencil: &Pencil, tp: &TransferPair) -> Result<CMatrix> {
    let factor = coarse_factor(pencil, tp)?;
    let pi = tp.p() * factor.solve(&(tp.r().adjoint() * pencil.a()));
    check_idempotent(&pi)?;
    Ok(pi)
}

fn check_idempotent(pi: &CMatrix) -> Result<()> {
    let defect = max_abs(&(pi * pi - pi));
    if defect > IDEMPOTENCY_TOL * max_abs(pi).max(f64::MIN_POSITIVE) {
        return Err(Error::ProjectionDefect { defect });
    }
    Ok(())
}

/// Dense `E_TG^{nu1,nu2}` assembled from LU solves with `M` and `R^* A P`.
pub fn error_propagator(tl: &TwoLevelOperator) -> Result<CMatrix> {
    let n = tl.n();
    let mut x = identity(n);
    for _ in 0..tl.nu1 {
        x = tl.smooth_block(&x);
    }
    let pi = tl.project_block(&identity(n));
    check_idempotent(&pi)?;
    x = &x - pi * &x;
    for _ in 0..tl.nu2 {
        x = tl.smooth_block(&x);
    }
    Ok(x)
}

/// `(D V_r^{-1}) E (D V_r^{-1})^{-1}`.
fn norm_similarity(e: &CMatrix, spec: &NormSpec, ged: &GeneralizedEigenDecomposition) -> Result<CMatrix> {
    spec.validate_for(ged)?;
    if e.shape() != (ged.n(), ged.n()) {
        return Err(Error::DimensionMismatch(format!(
            "operator is {:?}, pencil has size {}",
            e.shape(),
            ged.n()
        )));
    }
    let mut y = ged.v_r_inv() * e * ged.v_r();
    let d = spec.d();
    for i in 0..y.nrows() {
        for j in 0..y.ncols() {
            y[(i, j)] *= d[i] / d[j];
        }
    }
    Ok(y)
}

/// `||E||_N`: largest singular value of `(D V_r^{-1}) E (D V_r^{-1})^{-1}`.
pub fn n_norm_of(e: &CMatrix, spec: &NormSpec, ged: &GeneralizedEigenDecomposition) -> Result<f64> {
    Ok(spectral_norm(&norm_similarity(e, spec, ged)?))
}

/// `||E^k||_N^{1/k}`.
pub fn power_norm_check(
    e: &CMatrix,
    spec: &NormSpec,
    ged: &GeneralizedEigenDecomposition,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("power must be at least 1".into()));
    }
    // power the similarity-transformed matrix; avoids round trips through V_r
    let y = norm_similarity(e, spec, ged)?;
    let mut acc = y.clone();
    for _ in 1..k {
        acc = &acc * &y;
    }
    Ok(spectral_norm(&acc).powf(1.0 / k as f64))
}

/// Norm induced by a Hermitian positive definite `H`: `||L^* E L^{-*}||_2` with `H = L L^*`.
pub fn hpd_norm_of(e: &CMatrix, h: &CMatrix) -> Result<f64> {
    if e.shape() != h.shape() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {:?}, norm matrix is {:?}",
            e.shape(),
            h.shape()
        )));
    }
    let l = cholesky_lower(h).ok_or(Error::CholeskyFailure)?;
    let lt = l.adjoint();
    // L^* E L^{-*} = (L^{-1} (L^* E)^*)^*
    let y = lt.clone() * e;
    let z = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or(Error::CholeskyFailure)?
        .adjoint();
    Ok(spectral_norm(&z))
}

pub fn spectral_radius(e: &CMatrix) -> Result<f64> {
    if e.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(eigenvalues(e)?.iter().fold(0.0_f64, |acc, z| acc.max(z.norm())))
}

/// `|1 - lambda_{n_c+1}|^{nu1+nu2}`, or 0 when `n_c = n`.
pub fn predicted_bound(
    ged: &GeneralizedEigenDecomposition,
    n_c: usize,
    nu1: usize,
    nu2: usize,
) -> Result<f64> {
    let n = ged.n();
    if n_c == 0 || n_c > n {
        return Err(Error::BadCoarseDim { n_c, n });
    }
    if n_c == n {
        return Ok(0.0);
    }
    Ok(deviation(ged.lambdas()[n_c]).powi((nu1 + nu2) as i32))
}

/// Right-hand side, optionally with the exact solution it was built from.
#[derive(Debug, Clone)]
pub struct IterationProblem {
    pub b: CVector,
    pub x_true: Option<CVector>,
}

impl IterationProblem {
    pub fn new(b: CVector) -> Self {
        Self { b, x_true: None }
    }

    /// `b = 0`, `x_true = 0`: residuals are `-A x_k` and never hit a roundoff floor,
    /// so long runs measure the asymptotic factor.
    pub fn homogeneous(n: usize) -> Self {
        Self {
            b: CVector::zeros(n),
            x_true: Some(CVector::zeros(n)),
        }
    }

    /// `b = A x_true` with standard normal `x_true`.
    pub fn manufactured(pencil: &Pencil, seed: u64) -> Self {
        let x = normal_cvector(pencil.n(), &mut rng(seed));
        Self {
            b: pencil.a() * &x,
            x_true: Some(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationSettings {
    /// Seeds of the random starting vectors.
    pub seeds: Vec<u64>,
    pub k_cap: usize,
    /// Stop once `||r_k|| <= rtol ||r_0||`; 0 runs all `k_cap` cycles.
    pub rtol: f64,
}

impl Default for IterationSettings {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            k_cap: 20,
            rtol: 1e-10,
        }
    }
}

impl IterationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.k_cap == 0 {
            return Err(Error::InvalidArgument("k_cap must be at least 1".into()));
        }
        if self.rtol.is_nan() || self.rtol < 0.0 {
            return Err(Error::InvalidArgument(format!("rtol must be non-negative, got {}", self.rtol)));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("at least one seed is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedHistory {
    pub seed: u64,
    /// `||r_k||` for `k = 0..=k_max`.
    pub residual_norms: Vec<f64>,
    /// `||x_true - x_k||`, present for manufactured problems.
    pub error_norms: Option<Vec<f64>>,
    pub k_max: usize,
    pub diverged: bool,
    pub residual_factor: f64,
    pub error_factor: Option<f64>,
}

/// Predictions from the assembled error propagator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Predictions {
    pub predicted_bound: f64,
    pub norm_value: f64,
    pub spectral_radius: f64,
}

/// Bound, `N`-norm and spectral radius of the cycle in `tl`.
///
/// The bound uses `tl`'s coarse dimension, so it is only tight for the optimal transfers.
pub fn predictions(
    tl: &TwoLevelOperator,
    ged: &GeneralizedEigenDecomposition,
    spec: &NormSpec,
) -> Result<Predictions> {
    let e = error_propagator(tl)?;
    Ok(Predictions {
        predicted_bound: predicted_bound(ged, tl.transfers.n_c(), tl.nu1, tl.nu2)?,
        norm_value: n_norm_of(&e, spec, ged)?,
        spectral_radius: spectral_radius(&e)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub n_c: usize,
    pub nu1: usize,
    pub nu2: usize,
    pub k_cap: usize,
    pub rtol: f64,
    pub histories: Vec<SeedHistory>,
    /// Worst case over seeds of `(||r_kmax|| / ||r_0||)^{1/kmax}`.
    pub measured_residual_factor: f64,
    pub measured_error_factor: Option<f64>,
    pub predicted_bound: f64,
    pub norm_value: f64,
    pub spectral_radius: f64,
    pub diverged_seeds: Vec<u64>,
}

/// Starting vectors come from a separate ChaCha stream so they never
/// coincide with a manufactured solution drawn from the same seed.
fn start_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    let mut r = rng(seed);
    r.set_stream(1);
    r
}

fn geometric_factor(first: f64, last: f64, k: usize) -> f64 {
    if first == 0.0 || k == 0 {
        return 0.0;
    }
    (last / first).powf(1.0 / k as f64)
}

fn run_seed(tl: &TwoLevelOperator, problem: &IterationProblem, settings: &IterationSettings, seed: u64) -> SeedHistory {
    let a = tl.pencil.a();
    let mut x = normal_cvector(tl.n(), &mut start_rng(seed));
    let residual = |x: &CVector| scaled_norm(&(&problem.b - a * x));
    let error = |x: &CVector| problem.x_true.as_ref().map(|t| scaled_norm(&(t - x)));

    let r0 = residual(&x);
    let mut residuals = vec![r0];
    let mut errors: Option<Vec<f64>> = error(&x).map(|e| vec![e]);
    let mut diverged = false;
    let mut k = 0;
    while k < settings.k_cap && r0 > 0.0 {
        tl.cycle(&mut x, &problem.b);
        k += 1;
        let r = residual(&x);
        residuals.push(r);
        if let (Some(errs), Some(e)) = (errors.as_mut(), error(&x)) {
            errs.push(e);
        }
        if !r.is_finite() || r > DIVERGENCE_LIMIT * r0 {
            log::warn!("seed {seed} diverged at iteration {k}");
            diverged = true;
            break;
        }
        if r <= settings.rtol * r0 {
            break;
        }
    }
    let residual_factor = geometric_factor(r0, residuals[k], k);
    let error_factor = errors.as_ref().map(|e| geometric_factor(e[0], e[k], k));
    SeedHistory {
        seed,
        residual_norms: residuals,
        error_norms: errors,
        k_max: k,
        diverged,
        residual_factor,
        error_factor,
    }
}

/// Runs the cycle from one random start per seed and collects measured factors.
pub fn run_iterations(
    tl: &TwoLevelOperator,
    ged: &GeneralizedEigenDecomposition,
    spec: &NormSpec,
    problem: &IterationProblem,
    settings: &IterationSettings,
) -> Result<ConvergenceRecord> {
    settings.validate()?;
    if problem.b.len() != tl.n() || problem.x_true.as_ref().is_some_and(|x| x.len() != tl.n()) {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {}, operator has size {}",
            problem.b.len(),
            tl.n()
        )));
    }
    let histories: Vec<SeedHistory> = settings
        .seeds
        .iter()
        .map(|&s| run_seed(tl, problem, settings, s))
        .collect();
    let worst = |f: &dyn Fn(&SeedHistory) -> Option<f64>| {
        histories
            .iter()
            .map(f)
            .try_fold(0.0_f64, |acc, v| v.map(|v| if v.is_nan() { f64::INFINITY } else { acc.max(v) }))
    };
    let measured_residual_factor = worst(&|h| Some(h.residual_factor)).unwrap_or(0.0);
    let measured_error_factor = worst(&|h| h.error_factor);
    let pred = predictions(tl, ged, spec)?;
    Ok(ConvergenceRecord {
        n: tl.n(),
        n_c: tl.transfers.n_c(),
        nu1: tl.nu1,
        nu2: tl.nu2,
        k_cap: settings.k_cap,
        rtol: settings.rtol,
        diverged_seeds: histories.iter().filter(|h| h.diverged).map(|h| h.seed).collect(),
        histories,
        measured_residual_factor,
        measured_error_factor,
        predicted_bound: pred.predicted_bound,
        norm_value: pred.norm_value,
        spectral_radius: pred.spectral_radius,
    })
}

/// Random full-rank competitor transfers with standard normal entries.
///
/// Entries are real for real pencils and complex otherwise; a draw is
/// rejected when `R^* A P` is singular at the pivot floor.
pub fn random_transfers(pencil: &Pencil, n_c: usize, seed: u64) -> Result<TransferPair> {
    let n = pencil.n();
    if n_c == 0 || n_c > n {
        return Err(Error::BadCoarseDim { n_c, n });
    }
    let mut r = rng(seed);
    for _ in 0..100 {
        let (p, rr) = match pencil.field() {
            Field::Real => (
                to_complex(&normal_matrix(n, n_c, &mut r)),
                to_complex(&normal_matrix(n, n_c, &mut r)),
            ),
            Field::Complex => (
                complex_normal_matrix(n, n_c, &mut r),
                complex_normal_matrix(n, n_c, &mut r),
            ),
        };
        let tp = TransferPair::new(p, rr)?;
        if tp.has_full_rank() && coarse_factor(pencil, &tp).is_ok() {
            return Ok(tp);
        }
    }
    Err(Error::SingularCoarseOperator)
}

/// `E` for arbitrary transfers; convenience for comparisons.
pub fn error_propagator_for(pencil: &Pencil, tp: &TransferPair, nu1: usize, nu2: usize) -> Result<CMatrix> {
    error_propagator(&TwoLevelOperator::new(pencil.clone(), tp.clone(), nu1, nu2)?)
}

/// Eigenvalues of `E`, for multiset comparisons.
pub fn propagator_spectrum(e: &CMatrix) -> Result<Vec<C64>> {
    eigenvalues(e)
}
