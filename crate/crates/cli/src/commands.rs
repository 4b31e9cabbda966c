use std::fmt::Write as _;

use anyhow::anyhow;
use rayon::prelude::*;
use serde::Serialize;

use spectl_core::checks::{corrupt_last_column, run_checks, CheckConfig, VerifyReport};
use spectl_core::linalg::c;
use spectl_core::{
    factor_pencil, optimal_complex_transfers, optimal_real_transfers, run_iterations,
    ConvergenceRecord, Field, GeneralizedEigenDecomposition, IterationProblem, IterationSettings,
    NormSpec, Pencil, TransferPair, TwoLevelOperator, Warning,
};

use crate::config::{Format, Rhs, RunConfig};
use crate::failure::{Failure, Outcome, EXIT_CHECKS_FAILED, EXIT_OK};
use crate::setup::build_pencil;

/// Rendered output plus the exit code it implies.
pub struct Emitted {
    pub text: String,
    pub exit_code: i32,
}

impl Emitted {
    fn ok(text: String) -> Self {
        Self { text, exit_code: EXIT_OK }
    }
}

pub const SWEEP_HEADER: &str = "n_c,n_c_over_n,predicted_bound,norm_value,spectral_radius,measured_residual_factor,measured_error_factor,warnings";

/// Shortest round-trip representation; exponent form outside `[1e-4, 1e6)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn to_json<T: Serialize>(value: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.into()))?;
    s.push('\n');
    Ok(s)
}

fn factor(pencil: &Pencil) -> Outcome<GeneralizedEigenDecomposition> {
    let ged = factor_pencil(pencil)?;
    for w in ged.warnings() {
        log::warn!("{w}");
    }
    Ok(ged)
}

fn reject_format(cfg: &RunConfig, verb: &str, allowed: Format) -> Outcome<()> {
    match cfg.format {
        Some(f) if f != allowed => Err(Failure::config(anyhow!("{verb} does not support {f:?} output"))),
        _ => Ok(()),
    }
}

/// The single coarse dimension used by `verify` and `run`; defaults to `n / 2`.
fn single_nc(cfg: &RunConfig, n: usize) -> Outcome<usize> {
    if cfg.coarse.is_empty() {
        return Ok((n / 2).max(1));
    }
    let list = cfg.coarse.resolve(n).map_err(Failure::config)?;
    match list[..] {
        [k] => Ok(k),
        _ => Err(Failure::config(anyhow!(
            "this command takes one coarse dimension, got {list:?}; use sweep for several"
        ))),
    }
}

struct Transfers {
    pair: TransferPair,
    warnings: Vec<Warning>,
}

fn transfers(cfg: &RunConfig, ged: &GeneralizedEigenDecomposition, n_c: usize) -> Outcome<Transfers> {
    if cfg.real {
        let rt = optimal_real_transfers(ged, n_c)?;
        if rt.effective_n_c != n_c {
            log::info!("n_c {n_c} uses effective n_c {}", rt.effective_n_c);
        }
        Ok(Transfers {
            pair: rt.pair,
            warnings: rt.warnings,
        })
    } else {
        Ok(Transfers {
            pair: optimal_complex_transfers(ged, n_c)?,
            warnings: Vec::new(),
        })
    }
}

fn norm_spec(cfg: &RunConfig, n: usize) -> Outcome<NormSpec> {
    match &cfg.norm_weights {
        None => Ok(NormSpec::identity(n)),
        Some(w) => Ok(NormSpec::new(w.iter().map(|&x| c(x, 0.0)).collect(), cfg.real)?),
    }
}

fn iteration_parts(cfg: &RunConfig, pencil: &Pencil) -> (IterationProblem, IterationSettings) {
    let problem = match cfg.rhs {
        Rhs::Manufactured => IterationProblem::manufactured(pencil, cfg.rhs_seed),
        Rhs::Zero => IterationProblem::homogeneous(pencil.n()),
    };
    let settings = IterationSettings {
        seeds: cfg.seeds.clone(),
        k_cap: cfg.k_cap,
        rtol: cfg.rtol,
    };
    (problem, settings)
}

#[derive(Serialize)]
struct Eigenvalue {
    index: usize,
    re: f64,
    im: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    problem: String,
    smoother: &'a str,
    n: usize,
    field: Field,
    cond_vr: f64,
    eigenvalues: Vec<Eigenvalue>,
    warnings: &'a [Warning],
}

pub fn spectrum(cfg: &RunConfig) -> Outcome<Emitted> {
    let pencil = build_pencil(cfg)?;
    let ged = factor(&pencil)?;
    let eigenvalues: Vec<Eigenvalue> = ged
        .lambdas()
        .iter()
        .zip(ged.deviations())
        .enumerate()
        .map(|(i, (l, d))| Eigenvalue {
            index: i + 1,
            re: l.re,
            im: l.im,
            deviation: d,
        })
        .collect();
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&SpectrumReport {
            problem: cfg.problem_label(),
            smoother: pencil.smoother().label(),
            n: ged.n(),
            field: ged.field(),
            cond_vr: ged.cond_vr(),
            eigenvalues,
            warnings: ged.warnings(),
        })?,
        Format::Csv => {
            log::info!("cond(V_r) = {:e}", ged.cond_vr());
            let mut s = String::from("index,re,im,deviation\n");
            for e in &eigenvalues {
                let _ = writeln!(s, "{},{},{},{}", e.index, fmt_num(e.re), fmt_num(e.im), fmt_num(e.deviation));
            }
            s
        }
    };
    Ok(Emitted::ok(text))
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    problem: String,
    smoother: &'a str,
    field: Field,
    real_transfers: bool,
    corrupted_transfers: bool,
    all_passed: bool,
    warnings: Vec<Warning>,
    #[serde(flatten)]
    report: VerifyReport,
}

pub fn verify(cfg: &RunConfig) -> Outcome<Emitted> {
    reject_format(cfg, "verify", Format::Json)?;
    let pencil = build_pencil(cfg)?;
    let ged = factor(&pencil)?;
    let n_c = single_nc(cfg, ged.n())?;
    let tr = transfers(cfg, &ged, n_c)?;
    let mut pair = tr.pair;
    if cfg.corrupt_transfers {
        pair = corrupt_last_column(&pair)?;
    }
    let check_cfg = CheckConfig {
        competitors: cfg.competitors,
        basis_changes: cfg.basis_changes,
        seed: cfg.verify_seed,
        nu1: cfg.nu1,
        nu2: cfg.nu2,
        ..CheckConfig::new(pair.n_c())
    };
    let report = run_checks(&pencil, &ged, Some(&pair), &check_cfg);
    for check in report.checks.iter().filter(|c| !c.passed) {
        log::warn!("check {} failed: {}", check.name, check.detail);
    }
    let mut warnings = ged.warnings().to_vec();
    warnings.extend(tr.warnings);
    let all_passed = report.all_passed();
    let text = to_json(&VerifyOutput {
        problem: cfg.problem_label(),
        smoother: pencil.smoother().label(),
        field: ged.field(),
        real_transfers: cfg.real,
        corrupted_transfers: cfg.corrupt_transfers,
        all_passed,
        warnings,
        report,
    })?;
    Ok(Emitted {
        text,
        exit_code: if all_passed { EXIT_OK } else { EXIT_CHECKS_FAILED },
    })
}

#[derive(Debug, Clone)]
struct SweepRow {
    requested: usize,
    n_c: usize,
    record: Option<ConvergenceRecord>,
    warnings: Vec<String>,
}

impl SweepRow {
    fn render(&self, n: usize) -> String {
        let num = |f: fn(&ConvergenceRecord) -> Option<f64>| {
            self.record.as_ref().and_then(f).map(fmt_num).unwrap_or_default()
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n_c,
            fmt_num(self.n_c as f64 / n as f64),
            num(|r| Some(r.predicted_bound)),
            num(|r| Some(r.norm_value)),
            num(|r| Some(r.spectral_radius)),
            num(|r| Some(r.measured_residual_factor)),
            num(|r| r.measured_error_factor),
            csv_field(&self.warnings.join("; ")),
        )
    }
}

fn sweep_row(
    cfg: &RunConfig,
    pencil: &Pencil,
    ged: &GeneralizedEigenDecomposition,
    spec: &NormSpec,
    problem: &IterationProblem,
    settings: &IterationSettings,
    n_c: usize,
) -> SweepRow {
    let mut warnings: Vec<String> = ged.warnings().iter().map(ToString::to_string).collect();
    let result = transfers(cfg, ged, n_c).and_then(|tr| {
        warnings.extend(tr.warnings.iter().map(ToString::to_string));
        let tl = TwoLevelOperator::new(pencil.clone(), tr.pair, cfg.nu1, cfg.nu2)?;
        Ok(run_iterations(&tl, ged, spec, problem, settings)?)
    });
    match result {
        Ok(record) => {
            if !record.diverged_seeds.is_empty() {
                warnings.push(format!("diverged seeds {:?}", record.diverged_seeds));
            }
            SweepRow {
                requested: n_c,
                n_c: record.n_c,
                record: Some(record),
                warnings,
            }
        }
        Err(e) => {
            log::warn!("n_c {n_c}: {e}");
            warnings.push(format!("error: {e}"));
            SweepRow {
                requested: n_c,
                n_c,
                record: None,
                warnings,
            }
        }
    }
}

pub fn sweep(cfg: &RunConfig) -> Outcome<Emitted> {
    reject_format(cfg, "sweep", Format::Csv)?;
    if cfg.coarse.is_empty() {
        return Err(Failure::config(anyhow!("sweep needs --nc or --nc-frac")));
    }
    let pencil = build_pencil(cfg)?;
    let ged = factor(&pencil)?;
    let n = ged.n();
    let grid = cfg.coarse.resolve(n).map_err(Failure::config)?;
    let spec = norm_spec(cfg, n)?;
    spec.validate_for(&ged)?;
    let (problem, settings) = iteration_parts(cfg, &pencil);

    // rows are independent; par_iter keeps them in grid order
    let mut rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&k| sweep_row(cfg, &pencil, &ged, &spec, &problem, &settings, k))
        .collect();
    // real mode may grow two requests onto the same effective n_c; keep the exact one
    rows.sort_by_key(|r| (r.n_c, r.requested != r.n_c));
    rows.dedup_by_key(|r| r.n_c);

    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(SWEEP_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.render(n));
        text.push('\n');
    }
    Ok(Emitted::ok(text))
}

#[derive(Serialize)]
struct RunOutput<'a> {
    problem: String,
    smoother: &'a str,
    field: Field,
    real_transfers: bool,
    requested_n_c: usize,
    rhs: &'static str,
    warnings: Vec<Warning>,
    #[serde(flatten)]
    record: ConvergenceRecord,
}

pub fn run(cfg: &RunConfig) -> Outcome<Emitted> {
    reject_format(cfg, "run", Format::Json)?;
    let pencil = build_pencil(cfg)?;
    let ged = factor(&pencil)?;
    let n_c = single_nc(cfg, ged.n())?;
    let spec = norm_spec(cfg, ged.n())?;
    let tr = transfers(cfg, &ged, n_c)?;
    let tl = TwoLevelOperator::new(pencil.clone(), tr.pair, cfg.nu1, cfg.nu2)?;
    let (problem, settings) = iteration_parts(cfg, &pencil);
    let record = run_iterations(&tl, &ged, &spec, &problem, &settings)?;
    let mut warnings = ged.warnings().to_vec();
    warnings.extend(tr.warnings);
    let text = to_json(&RunOutput {
        problem: cfg.problem_label(),
        smoother: pencil.smoother().label(),
        field: ged.field(),
        real_transfers: cfg.real,
        requested_n_c: n_c,
        rhs: match cfg.rhs {
            Rhs::Manufactured => "manufactured",
            Rhs::Zero => "zero",
        },
        warnings,
        record,
    })?;
    Ok(Emitted::ok(text))
}
