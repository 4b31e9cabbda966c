//! Builds the pencil described by a [`RunConfig`].

use anyhow::Context;
use spectl_core::linalg::to_complex;
use spectl_core::problems::{
    load_matrix_market, AdvectionParams, GridSpec, ProblemSpec, WaveParams,
};
use spectl_core::smoothers::{
    block_jacobi, jacobi, red_black_jacobi, rs_cf_split, rs_cf_split_blocks,
};
use spectl_core::{BlockPartition, CMatrix, Pencil, Smoother};

use crate::config::{ProblemConfig, RunConfig, SmootherKind};
use crate::failure::{Failure, Outcome};

fn problem_spec(cfg: &RunConfig) -> Outcome<Option<ProblemSpec>> {
    Ok(Some(match &cfg.problem {
        ProblemConfig::Advection { refinement } => ProblemSpec::AdvectionReaction {
            grid: GridSpec::advection(*refinement),
            params: AdvectionParams::default(),
        },
        ProblemConfig::Wave { refinement, dt } => ProblemSpec::MixedWave {
            grid: GridSpec::wave(*refinement),
            dt: *dt,
            params: WaveParams::default(),
        },
        ProblemConfig::Laplacian { size } => ProblemSpec::Laplacian {
            grid: GridSpec::new(*size, *size)?,
        },
        ProblemConfig::Random { size, seed } => ProblemSpec::Random { n: *size, seed: *seed },
        ProblemConfig::External { .. } => return Ok(None),
    }))
}

fn load(path: &std::path::Path) -> Outcome<CMatrix> {
    load_matrix_market(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)
}

fn blocks(cfg: &RunConfig, spec: Option<&ProblemSpec>, n: usize) -> Outcome<BlockPartition> {
    Ok(match (cfg.block_size, spec) {
        (Some(size), _) => BlockPartition::contiguous(n, size)?,
        (None, Some(spec)) => spec.natural_blocks(n)?,
        (None, None) => BlockPartition::contiguous(n, 2)?,
    })
}

pub fn build_smoother(cfg: &RunConfig, a: &CMatrix, spec: Option<&ProblemSpec>) -> Outcome<Smoother> {
    let n = a.nrows();
    Ok(match cfg.smoother {
        SmootherKind::Jacobi => jacobi(a)?,
        SmootherKind::BlockJacobi => block_jacobi(a, &blocks(cfg, spec, n)?)?,
        SmootherKind::RbJacobi => red_black_jacobi(a, &rs_cf_split(a, cfg.theta), None)?,
        SmootherKind::BlockRbJacobi => {
            let part = blocks(cfg, spec, n)?;
            let split = rs_cf_split_blocks(a, &part, cfg.theta);
            red_black_jacobi(a, &split, Some(&part))?
        }
    })
}

pub fn build_pencil(cfg: &RunConfig) -> Outcome<Pencil> {
    let spec = problem_spec(cfg)?;
    let a = match (&spec, &cfg.problem) {
        (Some(spec), _) => to_complex(&spec.matrix()?),
        (None, ProblemConfig::External { a, .. }) => load(a)?,
        (None, _) => unreachable!("only external problems lack a spec"),
    };
    if !a.is_square() || a.nrows() == 0 {
        return Err(Failure::config(anyhow::anyhow!("A must be square and nonempty, got {:?}", a.shape())));
    }
    if let ProblemConfig::External { m: Some(m), .. } = &cfg.problem {
        log::info!("M read from {}; smoother setting ignored", m.display());
        return Ok(Pencil::new(a, load(m)?)?);
    }
    let smoother = build_smoother(cfg, &a, spec.as_ref())?;
    log::info!("{} with {} smoother, n = {}", cfg.problem_label(), smoother.label(), a.nrows());
    Ok(Pencil::with_smoother(a, smoother)?)
}
