//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p spectl-core --test acceptance -- --nocapture --test-threads 1`
//! to see them in order.

use std::time::{Duration, Instant};

use spectl_core::linalg::{c, max_abs, max_imag, multiset_distance, to_complex, LuFactor};
use spectl_core::pencil::deviation;
use spectl_core::problems::advection::{advection_reaction_matrix, AdvectionParams};
use spectl_core::problems::laplacian::five_point;
use spectl_core::problems::random::{
    complex_normal_matrix, diagonal_pencil, pencil_with_spectrum, random_dense_pencil, random_pencil, rng, SpectrumBlock,
};
use spectl_core::problems::wave::{mixed_wave_matrix, WaveParams};
use spectl_core::problems::GridSpec;
use spectl_core::smoothers::{
    jacobi, permute, red_black_jacobi, rs_cf_split, rs_cf_split_blocks, BlockPartition, Color,
    DEFAULT_THETA,
};
use spectl_core::transfer::{cf_block_defect, norm_matrix_from_gram};
use spectl_core::two_level::{error_propagator_for, hpd_norm_of, propagator_spectrum, random_transfers};
use spectl_core::{
    apply_basis_change, check_pi_orthogonal, coarse_projection, factor_pencil, n_norm_matrix,
    n_norm_of, optimal_complex_transfers, optimal_real_transfers, power_norm_check,
    predicted_bound, run_iterations, spectral_radius, BasisChange, CMatrix,
    GeneralizedEigenDecomposition, IterationProblem, IterationSettings, NormSpec, Pencil,
    TwoLevelOperator, C64,
};

fn report(id: u32, name: &str, passed: bool, detail: impl AsRef<str>) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{status}] {name}: {}", detail.as_ref());
}

/// The 25 real pencils shared by criteria 1-6: sizes cycle through 4, 8, 16, 32;
/// even entries use a Jacobi preconditioner, odd entries a dense perturbed one.
fn random_suite() -> Vec<(String, Pencil, GeneralizedEigenDecomposition)> {
    let sizes = [4, 8, 16, 32];
    (0..25)
        .map(|k| {
            let n = sizes[k % 4];
            let seed = 1000 + k as u64;
            let (label, p) = if k % 2 == 0 {
                (format!("jacobi n={n} seed={seed}"), random_pencil(n, seed))
            } else {
                (format!("dense n={n} seed={seed}"), random_dense_pencil(n, seed))
            };
            let ged = factor_pencil(&p).expect("suite pencils are diagonalizable");
            (label, p, ged)
        })
        .collect()
}

fn optimal_e(p: &Pencil, ged: &GeneralizedEigenDecomposition, n_c: usize) -> CMatrix {
    let tp = optimal_complex_transfers(ged, n_c).unwrap();
    error_propagator_for(p, &tp, 1, 1).unwrap()
}

#[test]
fn criterion_01_tightness() {
    let start = Instant::now();
    let suite = random_suite();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (label, p, ged) in &suite {
        let spec = NormSpec::identity(p.n());
        for n_c in 1..p.n() {
            let e = optimal_e(p, ged, n_c);
            let bound = predicted_bound(ged, n_c, 1, 1).unwrap();
            let norm = n_norm_of(&e, &spec, ged).unwrap();
            let rho = spectral_radius(&e).unwrap();
            let defect = (norm - bound).abs().max((rho - bound).abs()) / bound.max(1.0);
            if defect > 1e-7 {
                println!("  {label} n_c={n_c}: bound {bound:e} norm {norm:e} rho {rho:e}");
            }
            worst = worst.max(defect);
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    let passed = worst <= 1e-7 && elapsed <= Duration::from_secs(60);
    report(
        1,
        "tightness",
        passed,
        format!("{cases} cases, worst relative defect {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    );
    assert!(passed);
}

#[test]
fn criterion_02_geometric_averaging() {
    let suite = random_suite();
    let mut worst: f64 = 0.0;
    for (_, p, ged) in &suite {
        let spec = NormSpec::identity(p.n());
        for n_c in 1..p.n() {
            let e = optimal_e(p, ged, n_c);
            let bound = predicted_bound(ged, n_c, 1, 1).unwrap();
            for k in [1, 2, 3, 5] {
                worst = worst.max((power_norm_check(&e, &spec, ged, k).unwrap() - bound).abs());
            }
        }
    }
    let passed = worst <= 1e-6;
    report(2, "geometric averaging", passed, format!("worst |‖E^k‖^(1/k) - bound| {worst:.2e}"));
    assert!(passed);
}

#[test]
fn criterion_03_optimality() {
    let suite = random_suite();
    let mut violations = 0;
    let mut evaluated = 0;
    let mut min_gap = f64::INFINITY;
    for (pi, (label, p, ged)) in suite.iter().enumerate() {
        let spec = NormSpec::identity(p.n());
        for n_c in 1..p.n() {
            let bound = predicted_bound(ged, n_c, 1, 1).unwrap();
            for k in 0..100u64 {
                let seed = (pi as u64) << 32 | (n_c as u64) << 16 | k;
                let tp = random_transfers(p, n_c, seed).unwrap();
                let e = error_propagator_for(p, &tp, 1, 1).unwrap();
                let gap = n_norm_of(&e, &spec, ged).unwrap() - bound;
                min_gap = min_gap.min(gap);
                evaluated += 1;
                if gap < -1e-10 {
                    violations += 1;
                    println!("  {label} n_c={n_c} competitor {k}: gap {gap:e}");
                }
            }
        }
    }
    let passed = violations == 0;
    report(
        3,
        "optimality",
        passed,
        format!("{evaluated} competitors, {violations} violations, smallest gap {min_gap:.2e}"),
    );
    assert!(passed);
}

fn random_weights(n: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<C64> {
    let z = complex_normal_matrix(n, 2, r);
    (0..n)
        .map(|i| {
            let modulus = (0.5 * z[(i, 0)].re).exp();
            C64::from_polar(modulus, z[(i, 1)].re)
        })
        .collect()
}

fn random_block_gram(n: usize, n_c: usize, r: &mut rand_chacha::ChaCha8Rng) -> CMatrix {
    let mut g = CMatrix::zeros(n, n);
    for (start, size) in [(0, n_c), (n_c, n - n_c)] {
        let x = complex_normal_matrix(size, size, r) + CMatrix::identity(size, size) * c(2.0, 0.0);
        g.view_mut((start, start), (size, size)).copy_from(&(x.adjoint() * &x));
    }
    g
}

#[test]
fn criterion_04_orthogonality() {
    let suite = random_suite();
    let mut worst: f64 = 0.0;
    let mut worst_block: f64 = 0.0;
    let mut r = rng(4);
    for (_, p, ged) in &suite {
        let n = p.n();
        for n_c in 1..n {
            let tp = optimal_complex_transfers(ged, n_c).unwrap();
            let pi = coarse_projection(p, &tp).unwrap();
            for _ in 0..10 {
                let spec = NormSpec::new(random_weights(n, &mut r), false).unwrap();
                let nm = n_norm_matrix(&spec, ged).unwrap();
                worst = worst.max(check_pi_orthogonal(&pi, &nm).unwrap() / max_abs(&nm));
            }
            for _ in 0..5 {
                let nm = norm_matrix_from_gram(ged, &random_block_gram(n, n_c, &mut r)).unwrap();
                worst = worst.max(check_pi_orthogonal(&pi, &nm).unwrap() / max_abs(&nm));
                worst_block = worst_block.max(cf_block_defect(ged, &nm, n_c) / max_abs(&nm));
            }
        }
    }
    // negative control: Euclidean inner product on a nonsymmetric pencil
    let p = random_pencil(6, 42);
    let ged = factor_pencil(&p).unwrap();
    let pi = coarse_projection(&p, &optimal_complex_transfers(&ged, 2).unwrap()).unwrap();
    let control = check_pi_orthogonal(&pi, &CMatrix::identity(6, 6)).unwrap();
    let passed = worst <= 1e-9 && control > 1e-6;
    report(
        4,
        "orthogonality characterization",
        passed,
        format!("worst relative defect {worst:.2e} (CF coupling {worst_block:.1e}), N = I control {control:.2e}"),
    );
    assert!(passed);
}

#[test]
fn criterion_05_real_equivalence() {
    let suite = random_suite();
    let mut pencils = 0;
    let mut worst_dist: f64 = 0.0;
    let mut worst_imag: f64 = 0.0;
    for (_, p, ged) in &suite {
        if ged.lambdas().iter().all(|l| l.im == 0.0) {
            continue;
        }
        pencils += 1;
        for n_c in 1..p.n() {
            let real = optimal_real_transfers(ged, n_c).unwrap();
            let k = real.effective_n_c;
            // residue of the unrounded construction: conjugacy of the paired columns
            for v in [ged.v_r(), ged.v_l()] {
                let mut j = 0;
                while j < k {
                    if ged.starts_pair(j) {
                        let scale = v.column(j).amax_by(|z| z.norm());
                        let diff = (0..p.n()).map(|i| (v[(i, j + 1)] - v[(i, j)].conj()).norm()).fold(0.0, f64::max);
                        worst_imag = worst_imag.max(diff / scale);
                        j += 2;
                    } else {
                        worst_imag = worst_imag.max(v.column(j).iter().map(|z| z.im.abs()).fold(0.0, f64::max));
                        j += 1;
                    }
                }
            }
            worst_imag = worst_imag.max(max_imag(real.pair.p())).max(max_imag(real.pair.r()));
            let e_real = error_propagator_for(p, &real.pair, 1, 1).unwrap();
            worst_imag = worst_imag.max(max_imag(&e_real));
            let e_cplx = optimal_e(p, ged, k);
            let d = multiset_distance(&propagator_spectrum(&e_real).unwrap(), &propagator_spectrum(&e_cplx).unwrap());
            worst_dist = worst_dist.max(d);
        }
    }
    let passed = pencils > 0 && worst_imag <= 1e-10 && worst_dist <= 1e-7;
    report(
        5,
        "real-valued equivalence",
        passed,
        format!("{pencils} pencils with complex spectrum, imaginary residue {worst_imag:.1e}, eigenvalue distance {worst_dist:.2e}"),
    );
    assert!(passed);
}

trait AmaxBy {
    fn amax_by(&self, f: impl Fn(&C64) -> f64) -> f64;
}

impl<S: nalgebra::Storage<C64, nalgebra::Dyn, nalgebra::U1>> AmaxBy for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S> {
    fn amax_by(&self, f: impl Fn(&C64) -> f64) -> f64 {
        self.iter().map(f).fold(0.0, f64::max)
    }
}

#[test]
fn criterion_06_basis_invariance() {
    let suite = random_suite();
    let mut worst: f64 = 0.0;
    let mut r = rng(6);
    for (_, p, ged) in &suite {
        let n_c = p.n() / 2;
        let tp = optimal_complex_transfers(ged, n_c).unwrap();
        let pi = coarse_projection(p, &tp).unwrap();
        let mut done = 0;
        while done < 10 {
            let bp = complex_normal_matrix(n_c, n_c, &mut r);
            let br = complex_normal_matrix(n_c, n_c, &mut r);
            if LuFactor::new(&bp, 1e-6).is_none() || LuFactor::new(&br, 1e-6).is_none() {
                continue;
            }
            let changed = apply_basis_change(&tp, &BasisChange::new(bp, br).unwrap()).unwrap();
            worst = worst.max(max_abs(&(coarse_projection(p, &changed).unwrap() - &pi)));
            done += 1;
        }
    }
    let passed = worst <= 1e-10;
    report(6, "basis invariance", passed, format!("worst ‖ΔΠ‖_max {worst:.2e} over 250 changes"));
    assert!(passed);
}

#[test]
fn criterion_07_hpd_specialization() {
    let a = five_point(8);
    assert_eq!(a.nrows(), 64);
    let pencil = Pencil::with_smoother(to_complex(&a), jacobi(&to_complex(&a)).unwrap()).unwrap();
    assert!(pencil.is_hermitian_definite());
    let ged = factor_pencil(&pencil).unwrap();
    let mut worst: f64 = 0.0;
    for n_c in [4, 16, 32] {
        let tp = optimal_complex_transfers(&ged, n_c).unwrap();
        assert_eq!(tp.p(), tp.r());
        let e = error_propagator_for(&pencil, &tp, 1, 1).unwrap();
        let bound = predicted_bound(&ged, n_c, 1, 1).unwrap();
        let na = hpd_norm_of(&e, pencil.a()).unwrap();
        let nm = hpd_norm_of(&e, pencil.m()).unwrap();
        worst = worst.max((na - bound).abs()).max((nm - bound).abs());
    }
    let passed = worst <= 1e-7;
    report(7, "HPD specialization", passed, format!("worst |‖E‖_A,M - bound| {worst:.2e}"));
    assert!(passed);
}

#[test]
fn criterion_08_necessary_condition() {
    // |1 - lambda| = 3.5, 2.5, 1.2, then below 1
    let diag_pencil = diagonal_pencil(&[4.5, -1.5, 2.2, 0.3, 1.6, 0.5, 1.1, 0.8]);
    let similar = pencil_with_spectrum(
        &[4.5, -1.5, 2.2, 0.3, 1.6, 0.5, 1.1, 0.8].map(SpectrumBlock::Real),
        8,
    );
    let target = 1.2f64.powi(2);
    let mut min_norm = f64::INFINITY;
    let mut bound_err: f64 = 0.0;
    for p in [&diag_pencil, &similar] {
        let ged = factor_pencil(p).unwrap();
        assert!((deviation(ged.lambdas()[2]) - 1.2).abs() < 1e-10);
        bound_err = bound_err.max((predicted_bound(&ged, 2, 1, 1).unwrap() - target).abs());
        let spec = NormSpec::identity(p.n());
        for seed in 0..100 {
            let tp = random_transfers(p, 2, seed).unwrap();
            let e = error_propagator_for(p, &tp, 1, 1).unwrap();
            min_norm = min_norm.min(n_norm_of(&e, &spec, &ged).unwrap());
        }
    }
    let passed = min_norm >= target - 1e-10 && min_norm > 1.0 && bound_err < 1e-10;
    report(
        8,
        "necessary and sufficient condition",
        passed,
        format!("bound {target:.4}, smallest competitor norm {min_norm:.4} over 200 competitors"),
    );
    assert!(passed);
}

#[test]
fn criterion_09_iteration_consistency() {
    let start = Instant::now();
    let pencils: Vec<(&str, Pencil)> = vec![
        ("random n=6 seed=42", random_pencil(6, 42)),
        ("random n=16 seed=7", random_pencil(16, 7)),
        ("dense n=12 seed=3", random_dense_pencil(12, 3)),
    ];
    // homogeneous system, no early stop: every seed runs the full 200 cycles
    let settings = IterationSettings {
        k_cap: 200,
        rtol: 0.0,
        ..IterationSettings::default()
    };
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (label, p) in &pencils {
        let ged = factor_pencil(p).unwrap();
        let spec = NormSpec::identity(p.n());
        let problem = IterationProblem::homogeneous(p.n());
        for n_c in 1..p.n() {
            let bound = predicted_bound(&ged, n_c, 1, 1).unwrap();
            if !(0.05 < bound && bound < 0.95) {
                continue;
            }
            let tp = optimal_complex_transfers(&ged, n_c).unwrap();
            let tl = TwoLevelOperator::new(p.clone(), tp, 1, 1).unwrap();
            let rec = run_iterations(&tl, &ged, &spec, &problem, &settings).unwrap();
            let rel = (rec.measured_residual_factor - bound).abs() / bound;
            worst = worst.max(rel);
            checked += 1;
            if rel > 0.05 {
                failures.push(format!("{label} n_c={n_c}: measured {:.4} bound {bound:.4}", rec.measured_residual_factor));
            }
        }
    }
    for f in &failures {
        println!("  {f}");
    }
    let elapsed = start.elapsed();
    let passed = checked > 0 && failures.is_empty() && elapsed <= Duration::from_secs(120);
    report(
        9,
        "iteration consistency",
        passed,
        format!("{checked} runs with bound in (0.05, 0.95), worst relative gap {worst:.3}, {:.1}s", elapsed.as_secs_f64()),
    );
    assert!(passed);
}

fn bound_curve(a: &CMatrix, m: spectl_core::Smoother, fracs: &[f64]) -> Vec<f64> {
    let p = Pencil::with_smoother(a.clone(), m).unwrap();
    let ged = factor_pencil(&p).unwrap();
    let n = p.n();
    fracs
        .iter()
        .map(|f| {
            let n_c = ((f * n as f64).round() as usize).clamp(1, n);
            predicted_bound(&ged, n_c, 1, 1).unwrap()
        })
        .collect()
}

#[test]
fn criterion_10_qualitative_trends() {
    let fracs: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mut details = Vec::new();
    let mut passed = true;
    for r in [1, 2] {
        let sys = advection_reaction_matrix(GridSpec::advection(r), &AdvectionParams::default());
        let a = to_complex(&sys.matrix);
        let split = rs_cf_split(&a, DEFAULT_THETA);
        let jac = bound_curve(&a, jacobi(&a).unwrap(), &fracs);
        let rb = bound_curve(&a, red_black_jacobi(&a, &split, None).unwrap(), &fracs);
        let wins = jac.iter().zip(&rb).filter(|(j, b)| *b <= *j).count();
        let ok = wins as f64 >= 0.9 * fracs.len() as f64;
        passed &= ok;
        details.push(format!("advection r={r}: rb <= jacobi at {wins}/{}", fracs.len()));
    }
    let small: Vec<f64> = vec![0.1, 0.2, 0.3];
    let grid = GridSpec::wave(0);
    let mut curves = Vec::new();
    for dt in [1.0, 1e-3] {
        let a = to_complex(&mixed_wave_matrix(grid, dt, &WaveParams::default()).unwrap());
        curves.push(bound_curve(&a, jacobi(&a).unwrap(), &small));
    }
    let ordered = curves[0].iter().zip(&curves[1]).all(|(big, tiny)| big > tiny);
    passed &= ordered;
    details.push(format!(
        "wave dt=1 {:?} vs dt=1e-3 {:?}",
        curves[0].iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>(),
        curves[1].iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>()
    ));
    report(10, "qualitative trends", passed, details.join("; "));
    assert!(passed);
}

/// Entrywise structure of the red-black preconditioner in red-then-black order.
fn rb_structure_defect(a: &CMatrix, part: &BlockPartition, labels: &[Color], m: &CMatrix) -> (f64, bool) {
    let n = a.nrows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let same_block = part.block_of(i) == part.block_of(j);
            let keep = same_block || (labels[i] == Color::Black && labels[j] == Color::Red);
            let expected = if keep { a[(i, j)] } else { C64::default() };
            defect = defect.max((m[(i, j)] - expected).norm());
        }
    }
    let order: Vec<usize> = (0..n).filter(|&i| labels[i] == Color::Red).chain((0..n).filter(|&i| labels[i] == Color::Black)).collect();
    let reds = order.iter().filter(|&&i| labels[i] == Color::Red).count();
    let pm = permute(m, &order);
    let upper_zero = (0..reds).all(|i| (reds..n).all(|j| pm[(i, j)] == C64::default()));
    (defect, upper_zero)
}

#[test]
fn criterion_11_smoother_structure() {
    let mut cases: Vec<(String, CMatrix, Option<BlockPartition>)> = Vec::new();
    for r in [1, 2] {
        let sys = advection_reaction_matrix(GridSpec::advection(r), &AdvectionParams::default());
        cases.push((format!("advection r={r}"), to_complex(&sys.matrix), None));
    }
    let wave = to_complex(&mixed_wave_matrix(GridSpec::wave(0), 0.1, &WaveParams::default()).unwrap());
    let blocks = BlockPartition::contiguous(wave.nrows(), 3).unwrap();
    cases.push(("wave dt=0.1 point".into(), wave.clone(), None));
    cases.push(("wave dt=0.1 block".into(), wave, Some(blocks)));
    cases.push(("laplacian 6x6".into(), to_complex(&five_point(6)), None));
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (label, a, blocks) in &cases {
        let n = a.nrows();
        let split = match blocks {
            Some(b) => rs_cf_split_blocks(a, b, DEFAULT_THETA),
            None => rs_cf_split(a, DEFAULT_THETA),
        };
        let m = red_black_jacobi(a, &split, blocks.as_ref()).unwrap();
        let part = blocks.clone().unwrap_or_else(|| BlockPartition::singletons(n));
        let (defect, lower) = rb_structure_defect(a, &part, split.labels(), m.matrix());
        let both = !split.reds().is_empty() && !split.blacks().is_empty();
        if defect != 0.0 || !lower || !both {
            println!("  {label}: defect {defect:e}, lower triangular {lower}, two colors {both}");
            passed = false;
        }
        worst = worst.max(defect);
    }
    report(11, "smoother structure", passed, format!("{} problems, worst entry defect {worst:e}", cases.len()));
    assert!(passed);
}
