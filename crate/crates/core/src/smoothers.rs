//! Jacobi-type fine-space preconditioners and the classical CF split used to
//! color unknowns for red-black relaxation.
//!
//! Red points are the F-points of the split and are relaxed first; black
//! points are the C-points. In red-black ordering the preconditioner is
//!
//! ```text
//! M = P [ D_rr   0   ] P^T
//!       [ A_br  D_bb ]
//! ```
//!
//! with `D` the (block) diagonal of `A`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, LuFactor, C64, PIVOT_FLOOR};

/// Classical strength threshold.
pub const DEFAULT_THETA: f64 = 0.25;

/// A factored preconditioner `M` applied as `x <- x + M^{-1} r`.
#[derive(Debug, Clone)]
pub struct Smoother {
    m: CMatrix,
    factor: LuFactor,
    label: String,
}

impl Smoother {
    pub fn new(m: CMatrix, label: impl Into<String>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "smoother matrix is {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let factor = LuFactor::new(&m, PIVOT_FLOOR).ok_or(Error::SingularM)?;
        Ok(Self {
            m,
            factor,
            label: label.into(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `M^{-1} r`.
    pub fn apply(&self, r: &CVector) -> CVector {
        self.factor.solve_vec(r)
    }

    /// `M^{-1} B` column by column.
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        self.factor.solve(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    /// F-point, relaxed first.
    Red,
    /// C-point, relaxed second.
    Black,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CFSplit {
    labels: Vec<Color>,
    theta: f64,
}

impl CFSplit {
    pub fn new(labels: Vec<Color>, theta: f64) -> Self {
        Self { labels, theta }
    }

    pub fn labels(&self) -> &[Color] {
        &self.labels
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn reds(&self) -> Vec<usize> {
        self.indices(Color::Red)
    }

    pub fn blacks(&self) -> Vec<usize> {
        self.indices(Color::Black)
    }

    fn indices(&self, color: Color) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == color)
            .map(|(i, _)| i)
            .collect()
    }

    /// Permutation listing red points then black points, each ascending.
    pub fn red_black_order(&self) -> Vec<usize> {
        let mut order = self.reds();
        order.extend(self.blacks());
        order
    }
}

/// Disjoint, covering, nonempty index blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut owner = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for n = {n}"
                    )));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                owner[i] = b;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidPartition(format!("index {i} is not covered")));
        }
        Ok(Self { blocks, owner })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            blocks: (0..n).map(|i| vec![i]).collect(),
            owner: (0..n).collect(),
        }
    }

    /// Consecutive blocks of `size` indices; the last block may be shorter.
    pub fn contiguous(n: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidPartition("block size must be positive".into()));
        }
        let blocks = (0..n)
            .step_by(size)
            .map(|s| (s..(s + size).min(n)).collect())
            .collect();
        Self::new(blocks, n)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.owner.len()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.owner[i]
    }
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

pub fn jacobi(a: &CMatrix) -> Result<Smoother> {
    let n = check_square(a)?;
    if let Some(index) = (0..n).find(|&i| a[(i, i)] == C64::default()) {
        return Err(Error::ZeroDiagonal { index });
    }
    let m = CMatrix::from_diagonal(&a.diagonal());
    Smoother::new(m, "jacobi")
}

fn check_blocks_invertible(a: &CMatrix, part: &BlockPartition) -> Result<()> {
    for (b, block) in part.blocks().iter().enumerate() {
        let sub = a.select_rows(block).select_columns(block);
        if LuFactor::new(&sub, PIVOT_FLOOR).is_none() {
            return Err(Error::SingularBlock { block: b });
        }
    }
    Ok(())
}

pub fn block_jacobi(a: &CMatrix, part: &BlockPartition) -> Result<Smoother> {
    let n = check_square(a)?;
    if part.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} indices, matrix has {n}",
            part.dim()
        )));
    }
    check_blocks_invertible(a, part)?;
    let m = CMatrix::from_fn(n, n, |i, j| {
        if part.block_of(i) == part.block_of(j) {
            a[(i, j)]
        } else {
            C64::default()
        }
    });
    Smoother::new(m, "block_jacobi")
}

/// For each row `i`, the columns `j` that strongly influence `i`.
///
/// Classical measure on real parts: `j` is strong when
/// `-s_i a_ij >= theta * max_k(-s_i a_ik)` with `s_i` the sign of `a_ii`.
/// Rows without any coupling of the opposite sign to the diagonal fall back to
/// `|a_ij| >= theta * max_k |a_ik|`.
pub fn strong_influencers(a: &CMatrix, theta: f64) -> Vec<Vec<usize>> {
    let n = a.nrows();
    (0..n)
        .map(|i| {
            let sign = if a[(i, i)].re < 0.0 { -1.0 } else { 1.0 };
            let measure = |j: usize| -sign * a[(i, j)].re;
            let max_neg = (0..n)
                .filter(|&j| j != i)
                .map(measure)
                .fold(0.0_f64, f64::max);
            if max_neg > 0.0 {
                (0..n)
                    .filter(|&j| j != i && measure(j) >= theta * max_neg)
                    .collect()
            } else {
                let max_abs = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| a[(i, j)].norm())
                    .fold(0.0_f64, f64::max);
                if max_abs == 0.0 {
                    Vec::new()
                } else {
                    (0..n)
                        .filter(|&j| j != i && a[(i, j)].norm() >= theta * max_abs)
                        .collect()
                }
            }
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Undecided,
    Coarse,
    Fine,
}

/// Classical Ruge-Stuben first pass. C-points are labeled black, F-points red.
///
/// Points are selected greedily by largest measure `|S^T_i ∩ U| + 2|S^T_i ∩ F|`
/// with ties going to the lowest index. Points with no strong couplings in
/// either direction are made C-points up front.
pub fn rs_cf_split(a: &CMatrix, theta: f64) -> CFSplit {
    let n = a.nrows();
    let influencers = strong_influencers(a, theta);
    let mut influences: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in influencers.iter().enumerate() {
        for &j in row {
            influences[j].push(i);
        }
    }

    let mut state = vec![State::Undecided; n];
    let mut weight: Vec<i64> = influences.iter().map(|s| s.len() as i64).collect();
    for i in 0..n {
        if influencers[i].is_empty() && influences[i].is_empty() {
            state[i] = State::Coarse;
        }
    }

    loop {
        let pick = (0..n)
            .filter(|&i| state[i] == State::Undecided)
            .max_by(|&x, &y| weight[x].cmp(&weight[y]).then(y.cmp(&x)));
        let Some(i) = pick else { break };
        state[i] = State::Coarse;
        for &j in &influences[i] {
            if state[j] != State::Undecided {
                continue;
            }
            state[j] = State::Fine;
            for &k in &influencers[j] {
                if state[k] == State::Undecided {
                    weight[k] += 1;
                }
            }
        }
        for &j in &influencers[i] {
            if state[j] == State::Undecided {
                weight[j] -= 1;
            }
        }
    }

    let labels = state
        .into_iter()
        .map(|s| match s {
            State::Fine => Color::Red,
            _ => Color::Black,
        })
        .collect();
    CFSplit::new(labels, theta)
}

/// CF split of the block graph, expanded so every unknown takes its block's color.
///
/// The block graph has entries `sum_{i in I, j in J} a_ij`.
pub fn rs_cf_split_blocks(a: &CMatrix, part: &BlockPartition, theta: f64) -> CFSplit {
    let nb = part.blocks().len();
    let mut q = CMatrix::zeros(nb, nb);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            q[(part.block_of(i), part.block_of(j))] += a[(i, j)];
        }
    }
    let coarse = rs_cf_split(&q, theta);
    let labels = (0..a.nrows())
        .map(|i| coarse.labels()[part.block_of(i)])
        .collect();
    CFSplit::new(labels, theta)
}

/// Red-black (FC) Jacobi preconditioner, point-wise or block-wise.
pub fn red_black_jacobi(
    a: &CMatrix,
    split: &CFSplit,
    part: Option<&BlockPartition>,
) -> Result<Smoother> {
    let n = check_square(a)?;
    if split.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "split has {} labels, matrix has {n} rows",
            split.len()
        )));
    }
    let singletons;
    let part = match part {
        Some(p) => {
            if p.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "partition covers {} indices, matrix has {n}",
                    p.dim()
                )));
            }
            p
        }
        None => {
            singletons = BlockPartition::singletons(n);
            &singletons
        }
    };
    let labels = split.labels();
    for (b, block) in part.blocks().iter().enumerate() {
        let first = labels[block[0]];
        if block.iter().any(|&i| labels[i] != first) {
            return Err(Error::InconsistentBlockColoring { block: b });
        }
    }
    check_blocks_invertible(a, part)?;

    let m = CMatrix::from_fn(n, n, |i, j| {
        let same_block = part.block_of(i) == part.block_of(j);
        let lower_coupling = labels[i] == Color::Black && labels[j] == Color::Red;
        if same_block || lower_coupling {
            a[(i, j)]
        } else {
            C64::default()
        }
    });
    let label = if part.blocks().iter().all(|b| b.len() == 1) {
        "rb_jacobi"
    } else {
        "block_rb_jacobi"
    };
    Smoother::new(m, label)
}

/// Symmetric permutation `m[perm, perm]`.
pub fn permute(m: &CMatrix, perm: &[usize]) -> CMatrix {
    m.select_rows(perm).select_columns(perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, max_abs, to_complex};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn mat(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        to_complex(&DMatrix::from_row_slice(rows, cols, data))
    }

    fn laplacian_1d(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(2.0, 0.0)
            } else if i.abs_diff(j) == 1 {
                C64::new(-1.0, 0.0)
            } else {
                C64::default()
            }
        })
    }

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |i, j| {
            let x: f64 = StandardNormal.sample(&mut rng);
            C64::new(if i == j { x + n as f64 } else { x }, 0.0)
        })
    }

    #[test]
    fn jacobi_of_diagonal_is_exact() {
        let a = mat(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let s = jacobi(&a).unwrap();
        assert_eq!(s.matrix(), &a);
        let iter = CMatrix::identity(2, 2) - s.solve(&a);
        assert_eq!(max_abs(&iter), 0.0);
    }

    #[test]
    fn jacobi_takes_diagonal() {
        let a = mat(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(jacobi(&a).unwrap().matrix(), &mat(2, 2, &[2.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn jacobi_rejects_zero_diagonal() {
        let a = mat(2, 2, &[0.0, 1.0, 1.0, 2.0]);
        assert!(matches!(jacobi(&a), Err(Error::ZeroDiagonal { index: 0 })));
    }

    #[test]
    fn jacobi_laplacian_spectrum() {
        // eig(D^{-1} A) = (2 - 2 cos(k pi / 5)) / 2, k = 1..4
        let a = laplacian_1d(4);
        let s = jacobi(&a).unwrap();
        let vals = eigenvalues(&s.solve(&a)).unwrap();
        let expected: Vec<C64> = (1..=4)
            .map(|k| {
                let theta = k as f64 * std::f64::consts::PI / 5.0;
                C64::new((2.0 - 2.0 * theta.cos()) / 2.0, 0.0)
            })
            .collect();
        assert!(crate::linalg::multiset_distance(&vals, &expected) < 1e-10);
    }

    #[test]
    fn smoother_factor_reproduces_probes() {
        let a = random_matrix(8, 3);
        let s = Smoother::new(a.clone(), "dense").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x = CVector::from_fn(8, |_, _| C64::new(StandardNormal.sample(&mut rng), 0.0));
            let back = &a * s.apply(&x);
            assert!((back - &x).norm() <= 1e-12 * x.norm());
        }
    }

    #[test]
    fn block_jacobi_reductions() {
        let a = random_matrix(5, 1);
        let single = block_jacobi(&a, &BlockPartition::singletons(5)).unwrap();
        assert_eq!(single.matrix(), jacobi(&a).unwrap().matrix());
        let whole = block_jacobi(&a, &BlockPartition::new(vec![(0..5).collect()], 5).unwrap())
            .unwrap();
        assert_eq!(whole.matrix(), &a);
    }

    #[test]
    fn block_jacobi_two_block_spectrum() {
        let a = random_matrix(4, 42);
        let part = BlockPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let s = block_jacobi(&a, &part).unwrap();
        // Oracle: explicit inverse of each 2x2 block by the adjugate formula.
        let mut minv = CMatrix::zeros(4, 4);
        for block in part.blocks() {
            let (p, q) = (block[0], block[1]);
            let (w, x, y, z) = (a[(p, p)], a[(p, q)], a[(q, p)], a[(q, q)]);
            let det = w * z - x * y;
            minv[(p, p)] = z / det;
            minv[(p, q)] = -x / det;
            minv[(q, p)] = -y / det;
            minv[(q, q)] = w / det;
        }
        let ours = eigenvalues(&s.solve(&a)).unwrap();
        let oracle = eigenvalues(&(minv * &a)).unwrap();
        assert!(crate::linalg::multiset_distance(&ours, &oracle) < 1e-10);
    }

    #[test]
    fn block_jacobi_rejects_singular_block() {
        let a = mat(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let part = BlockPartition::new(vec![vec![0, 1]], 2).unwrap();
        assert!(matches!(
            block_jacobi(&a, &part),
            Err(Error::SingularBlock { block: 0 })
        ));
    }

    #[test]
    fn partition_validation() {
        assert!(BlockPartition::new(vec![vec![0], vec![0, 1]], 2).is_err());
        assert!(BlockPartition::new(vec![vec![0]], 2).is_err());
        assert!(BlockPartition::new(vec![vec![0, 1], vec![]], 2).is_err());
        let p = BlockPartition::contiguous(5, 2).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2, 3], vec![4]]);
    }

    #[test]
    fn diagonal_matrix_is_all_black() {
        let a = mat(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
        let split = rs_cf_split(&a, DEFAULT_THETA);
        assert!(split.labels().iter().all(|&c| c == Color::Black));
    }

    #[test]
    fn laplacian_1d_alternates() {
        // Frozen from pyamg's classical RS first pass on the same matrix:
        // splitting = [0, 1, 0, 1, 0], i.e. C = {2, 4} in 1-based indices.
        let split = rs_cf_split(&laplacian_1d(5), DEFAULT_THETA);
        assert_eq!(split.blacks(), vec![1, 3]);
        assert_eq!(split.reds(), vec![0, 2, 4]);
    }

    #[test]
    fn laplacian_2d_f_points_have_c_neighbors() {
        let a = crate::problems::laplacian::five_point(4);
        let a = to_complex(&a);
        let split = rs_cf_split(&a, DEFAULT_THETA);
        let strong = strong_influencers(&a, DEFAULT_THETA);
        for i in split.reds() {
            assert!(
                strong[i].iter().any(|&j| split.labels()[j] == Color::Black),
                "F-point {i} has no strong C neighbor"
            );
        }
        assert!(!split.reds().is_empty() && !split.blacks().is_empty());
    }

    #[test]
    fn rs_split_is_deterministic() {
        let a = random_matrix(12, 5);
        assert_eq!(rs_cf_split(&a, 0.25), rs_cf_split(&a, 0.25));
    }

    #[test]
    fn positive_offdiagonal_rows_use_magnitude_fallback() {
        let a = mat(3, 3, &[2.0, 1.0, 0.1, 1.0, 2.0, 1.0, 0.1, 1.0, 2.0]);
        let strong = strong_influencers(&a, 0.25);
        assert_eq!(strong[0], vec![1]);
        assert_eq!(strong[1], vec![0, 2]);
    }

    #[test]
    fn red_black_two_by_two() {
        let a = mat(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let split = CFSplit::new(vec![Color::Red, Color::Black], DEFAULT_THETA);
        let s = red_black_jacobi(&a, &split, None).unwrap();
        assert_eq!(s.matrix(), &mat(2, 2, &[2.0, 0.0, 1.0, 2.0]));
    }

    #[test]
    fn single_color_reduces_to_jacobi() {
        let a = random_matrix(6, 9);
        for color in [Color::Red, Color::Black] {
            let split = CFSplit::new(vec![color; 6], DEFAULT_THETA);
            let s = red_black_jacobi(&a, &split, None).unwrap();
            assert_eq!(s.matrix(), jacobi(&a).unwrap().matrix());
            let part = BlockPartition::contiguous(6, 2).unwrap();
            let s = red_black_jacobi(&a, &split, Some(&part)).unwrap();
            assert_eq!(s.matrix(), block_jacobi(&a, &part).unwrap().matrix());
        }
    }

    #[test]
    fn block_coloring_must_be_consistent() {
        let a = random_matrix(4, 2);
        let split = CFSplit::new(
            vec![Color::Red, Color::Black, Color::Black, Color::Black],
            DEFAULT_THETA,
        );
        let part = BlockPartition::contiguous(4, 2).unwrap();
        assert!(matches!(
            red_black_jacobi(&a, &split, Some(&part)),
            Err(Error::InconsistentBlockColoring { block: 0 })
        ));
    }

    #[test]
    fn point_and_singleton_block_versions_agree() {
        let a = random_matrix(7, 4);
        let split = rs_cf_split(&a, DEFAULT_THETA);
        let point = red_black_jacobi(&a, &split, None).unwrap();
        let block =
            red_black_jacobi(&a, &split, Some(&BlockPartition::singletons(7))).unwrap();
        assert_eq!(point.matrix(), block.matrix());
    }

    #[test]
    fn one_sweep_zeroes_black_residuals_on_alternating_split() {
        // With no red-red or black-black couplings, M - A vanishes on black rows,
        // so the residual A (I - M^{-1} A) e = (M - A) M^{-1} A e has zero black rows.
        let a = laplacian_1d(5);
        let split = rs_cf_split(&a, DEFAULT_THETA);
        let s = red_black_jacobi(&a, &split, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let e = CVector::from_fn(5, |_, _| C64::new(StandardNormal.sample(&mut rng), 0.0));
            let e_new = &e - s.apply(&(&a * &e));
            let r = &a * &e_new;
            for i in split.blacks() {
                assert!(r[i].norm() <= 1e-12 * e.norm(), "black row {i}: {}", r[i]);
            }
            // The red half-sweep alone zeroes red residuals.
            let reds = split.reds();
            let mut half = e.clone();
            let r0 = &a * &e;
            for &i in &reds {
                half[i] -= r0[i] / a[(i, i)];
            }
            let r_half = &a * &half;
            for &i in &reds {
                assert!(r_half[i].norm() <= 1e-12 * e.norm());
            }
        }
    }
}
