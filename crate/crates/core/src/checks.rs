//! Named verification suite run against one configured pencil.
//!
//! Each check records what it measured and the tolerance it used; a check
//! that cannot be evaluated (for example because the coarse operator is
//! singular) is reported as failed with the error in `detail`.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{max_abs, multiset_distance, CMatrix, LuFactor};
use crate::pencil::{
    a_scale, reconstruction_residual, verify_biorthogonality, Field, GeneralizedEigenDecomposition,
    Pencil,
};
use crate::problems::random::{complex_normal_matrix, rng};
use crate::transfer::{
    apply_basis_change, check_pi_orthogonal, n_norm_matrix, optimal_complex_transfers,
    optimal_real_transfers, BasisChange, NormSpec, TransferPair,
};
use crate::two_level::{
    coarse_projection, error_propagator_for, hpd_norm_of, n_norm_of, power_norm_check,
    predicted_bound, propagator_spectrum, random_transfers, spectral_radius,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckConfig {
    pub n_c: usize,
    pub nu1: usize,
    pub nu2: usize,
    pub competitors: usize,
    pub basis_changes: usize,
    pub powers: Vec<usize>,
    pub seed: u64,
}

impl CheckConfig {
    pub fn new(n_c: usize) -> Self {
        Self {
            n_c,
            nu1: 1,
            nu2: 1,
            competitors: 100,
            basis_changes: 10,
            powers: vec![1, 2, 3, 5],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub n_c: usize,
    pub nu1: usize,
    pub nu2: usize,
    pub cond_vr: f64,
    pub predicted_bound: Option<f64>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn le(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: measured <= tolerance,
        measured,
        tolerance,
        detail: detail.into(),
    }
}

fn failed(name: &str, err: impl std::fmt::Display) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: false,
        measured: f64::NAN,
        tolerance: f64::NAN,
        detail: err.to_string(),
    }
}

fn guard(name: &str, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| failed(name, e))
}

/// Runs every applicable check; `transfers` defaults to the optimal complex pair.
pub fn run_checks(
    pencil: &Pencil,
    ged: &GeneralizedEigenDecomposition,
    transfers: Option<&TransferPair>,
    cfg: &CheckConfig,
) -> VerifyReport {
    let n = ged.n();
    let (nu1, nu2) = (cfg.nu1, cfg.nu2);
    let mut checks = Vec::new();

    checks.push(guard("biorthogonality", || {
        let rep = verify_biorthogonality(ged, pencil)?;
        let scale = a_scale(pencil).max(1.0);
        let measured = rep.diag_m_defect.max(rep.offdiag_m).max((rep.diag_a_defect.max(rep.offdiag_a)) / scale);
        Ok(le("biorthogonality", measured, 1e-10, "max of |V_l^* M V_r - I| and |V_l^* A V_r - Lambda| / max(1, |A|)"))
    }));

    let devs = ged.deviations();
    let increase = devs.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max);
    checks.push(le("ordering", increase, 0.0, "largest increase of |1 - lambda| along the ordering"));

    checks.push({
        let res = reconstruction_residual(ged, pencil);
        let tol = 1e-9 * ged.cond_vr().max(1.0);
        le("reconstruction", res, tol, "|A V_r - M V_r Lambda| / |A|, tolerance scaled by cond(V_r)")
    });

    let tp = match transfers {
        Some(t) => Ok(t.clone()),
        None => optimal_complex_transfers(ged, cfg.n_c),
    };
    let tp = match tp {
        Ok(tp) => tp,
        Err(e) => {
            checks.push(failed("transfers", e));
            return VerifyReport {
                n,
                n_c: cfg.n_c,
                nu1,
                nu2,
                cond_vr: ged.cond_vr(),
                predicted_bound: None,
                checks,
            };
        }
    };
    let n_c = tp.n_c();
    let bound = predicted_bound(ged, n_c, nu1, nu2).ok();
    let spec = NormSpec::identity(n);

    let (rp, rr) = tp.ranks();
    checks.push(CheckResult {
        name: "transfer_rank".into(),
        passed: rp == n_c && rr == n_c,
        measured: (2 * n_c - rp - rr) as f64,
        tolerance: 0.0,
        detail: format!("rank(P) = {rp}, rank(R) = {rr}, n_c = {n_c}"),
    });

    checks.push(guard("orthogonality", || {
        let pi = coarse_projection(pencil, &tp)?;
        let nm = n_norm_matrix(&spec, ged)?;
        let defect = check_pi_orthogonal(&pi, &nm)? / max_abs(&nm);
        Ok(le("orthogonality", defect, 1e-9, "|N Pi - Pi^* N|_max / |N|_max with D = I"))
    }));

    let e = error_propagator_for(pencil, &tp, nu1, nu2).map_err(|e| e.to_string());
    let with_e = |name: &str, f: &dyn Fn(&CMatrix) -> Result<CheckResult>| match &e {
        Ok(e) => guard(name, || f(e)),
        Err(msg) => failed(name, msg),
    };
    checks.push(with_e("tightness", &|e| {
        let bound = predicted_bound(ged, n_c, nu1, nu2)?;
        let norm = n_norm_of(e, &spec, ged)?;
        let rho = spectral_radius(e)?;
        let measured = (norm - bound).abs().max((rho - bound).abs()) / bound.max(1.0);
        Ok(le(
            "tightness",
            measured,
            1e-8,
            format!("bound {bound:.6e}, N-norm {norm:.6e}, spectral radius {rho:.6e}"),
        ))
    }));

    checks.push(with_e("geometric_average", &|e| {
        let bound = predicted_bound(ged, n_c, nu1, nu2)?;
        let mut worst: f64 = 0.0;
        for &k in &cfg.powers {
            worst = worst.max((power_norm_check(e, &spec, ged, k)? - bound).abs());
        }
        Ok(le("geometric_average", worst, 1e-6, format!("powers {:?}", cfg.powers)))
    }));

    checks.push(guard("optimality", || {
        let bound = predicted_bound(ged, n_c, nu1, nu2)?;
        let mut violations = 0usize;
        let mut min_gap = f64::INFINITY;
        for k in 0..cfg.competitors {
            let comp = random_transfers(pencil, n_c, cfg.seed.wrapping_add(k as u64))?;
            let e = error_propagator_for(pencil, &comp, nu1, nu2)?;
            let gap = n_norm_of(&e, &spec, ged)? - bound;
            min_gap = min_gap.min(gap);
            if gap < -1e-10 {
                violations += 1;
            }
        }
        Ok(CheckResult {
            name: "optimality".into(),
            passed: violations == 0,
            measured: violations as f64,
            tolerance: 0.0,
            detail: format!(
                "{violations} of {} competitors below the bound, smallest gap {min_gap:.3e}",
                cfg.competitors
            ),
        })
    }));

    checks.push(guard("basis_invariance", || {
        let pi = coarse_projection(pencil, &tp)?;
        let mut r = rng(cfg.seed ^ 0x5bd1_e995);
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < cfg.basis_changes {
            let (bp, br) = (complex_normal_matrix(n_c, n_c, &mut r), complex_normal_matrix(n_c, n_c, &mut r));
            if LuFactor::new(&bp, 1e-6).is_none() || LuFactor::new(&br, 1e-6).is_none() {
                continue;
            }
            let changed = apply_basis_change(&tp, &BasisChange::new(bp, br)?)?;
            worst = worst.max(max_abs(&(coarse_projection(pencil, &changed)? - &pi)));
            done += 1;
        }
        let tol = 1e-10 * max_abs(&pi).max(1.0);
        Ok(le("basis_invariance", worst, tol, "max |Pi(P B_P, R B_R) - Pi(P, R)|, relative to |Pi|_max"))
    }));

    if ged.field() == Field::Real {
        checks.push(guard("real_equivalence", || {
            let real = optimal_real_transfers(ged, n_c)?;
            let k = real.effective_n_c;
            let imag = crate::linalg::max_imag(real.pair.p()).max(crate::linalg::max_imag(real.pair.r()));
            let complex = optimal_complex_transfers(ged, k)?;
            let er = propagator_spectrum(&error_propagator_for(pencil, &real.pair, nu1, nu2)?)?;
            let ec = propagator_spectrum(&error_propagator_for(pencil, &complex, nu1, nu2)?)?;
            let dist = multiset_distance(&er, &ec);
            Ok(le(
                "real_equivalence",
                dist.max(imag),
                1e-7,
                format!("effective n_c {k}; eigenvalue multiset distance {dist:.3e}, imaginary residue {imag:.1e}"),
            ))
        }));
    }

    if pencil.is_hermitian_definite() {
        checks.push(with_e("hpd_norms", &|e| {
            let bound = predicted_bound(ged, n_c, nu1, nu2)?;
            let na = hpd_norm_of(e, pencil.a())?;
            let nm = hpd_norm_of(e, pencil.m())?;
            let measured = (na - bound).abs().max((nm - bound).abs());
            Ok(le("hpd_norms", measured, 1e-8, format!("A-norm {na:.6e}, M-norm {nm:.6e}")))
        }));
    }

    VerifyReport {
        n,
        n_c,
        nu1,
        nu2,
        cond_vr: ged.cond_vr(),
        predicted_bound: bound,
        checks,
    }
}

/// Convenience for callers holding only the pencil.
pub fn verify_pencil(pencil: &Pencil, transfers: Option<&TransferPair>, cfg: &CheckConfig) -> Result<VerifyReport> {
    let ged = crate::pencil::factor_pencil(pencil)?;
    Ok(run_checks(pencil, &ged, transfers, cfg))
}

/// Zeroes the last column of `P`, the negative fixture for the rank check.
pub fn corrupt_last_column(tp: &TransferPair) -> Result<TransferPair> {
    let mut p: CMatrix = tp.p().clone();
    let last = p.ncols() - 1;
    p.column_mut(last).fill(Default::default());
    TransferPair::new(p, tp.r().clone())
}
