//! Unscaled finite-difference Laplacians (SPD fixtures).

use nalgebra::DMatrix;

use super::GridSpec;

/// `tridiag(-1, 2, -1)` of size `n`.
pub fn laplacian_1d(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    })
}

/// 5-point stencil on an `m x m` interior grid with Dirichlet boundary, lexicographic order.
pub fn five_point(m: usize) -> DMatrix<f64> {
    let n = m * m;
    let mut a = DMatrix::zeros(n, n);
    for j in 0..m {
        for i in 0..m {
            let k = j * m + i;
            a[(k, k)] = 4.0;
            if i > 0 {
                a[(k, k - 1)] = -1.0;
            }
            if i + 1 < m {
                a[(k, k + 1)] = -1.0;
            }
            if j > 0 {
                a[(k, k - m)] = -1.0;
            }
            if j + 1 < m {
                a[(k, k + m)] = -1.0;
            }
        }
    }
    a
}

/// 5-point Laplacian on the interior nodes of `grid` (`nx - 1` per direction).
pub fn hpd_laplacian(grid: GridSpec) -> DMatrix<f64> {
    five_point(grid.nx.min(grid.ny) - 1)
}

/// Closed-form spectrum of [`five_point`]: `4 - 2 cos(k pi/(m+1)) - 2 cos(l pi/(m+1))`.
pub fn five_point_eigenvalues(m: usize) -> Vec<f64> {
    let h = std::f64::consts::PI / (m + 1) as f64;
    let mut out: Vec<f64> = (1..=m)
        .flat_map(|k| (1..=m).map(move |l| 4.0 - 2.0 * (k as f64 * h).cos() - 2.0 * (l as f64 * h).cos()))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    #[test]
    fn single_unknown() {
        let a = hpd_laplacian(GridSpec::new(2, 2).unwrap());
        assert_eq!(a, DMatrix::from_element(1, 1, 4.0));
    }

    #[test]
    fn symmetric() {
        let a = hpd_laplacian(GridSpec::new(6, 6).unwrap());
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn analytic_spectrum() {
        for m in [1, 3, 8] {
            let mut ev: Vec<f64> = SymmetricEigen::new(five_point(m)).eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            for (x, y) in ev.iter().zip(five_point_eigenvalues(m)) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
