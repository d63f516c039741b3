use crate::error::{GeomError, Result};
use crate::numeric::Matrix;

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted ascending; column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return Err(GeomError::domain(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(GeomError::domain("matrix is not symmetric"));
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = Matrix::identity(n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(m)?.values)
}

/// Count of (positive, negative) eigenvalues, ignoring those within `zero_tol`
/// of zero relative to the largest magnitude.
pub fn signature(values: &[f64], zero_tol: f64) -> (usize, usize) {
    let scale = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cut = zero_tol * scale;
    let pos = values.iter().filter(|&&x| x > cut).count();
    let neg = values.iter().filter(|&&x| x < -cut).count();
    (pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_spectrum() {
        let vals = symmetric_eigenvalues(&Matrix::identity(2)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0]);
    }

    #[test]
    fn swap_matrix_spectrum() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let vals = symmetric_eigenvalues(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_cost_metric_spectrum() {
        // Characteristic polynomial of ½[[0,I],[I,0]] is (λ² − ¼)², roots ±½ twice.
        let m = Matrix::from_fn(4, 4, |i, j| if (i + 2 == j) || (j + 2 == i) { 0.5 } else { 0.0 });
        let vals = symmetric_eigenvalues(&m).unwrap();
        for (v, e) in vals.iter().zip([-0.5, -0.5, 0.5, 0.5]) {
            assert!((v - e).abs() < 1e-14, "{vals:?}");
        }
        assert_eq!(signature(&vals, 1e-12), (2, 2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(symmetric_eigenvalues(&Matrix::zeros(2, 3)).is_err());
        let asym = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(symmetric_eigenvalues(&asym), Err(GeomError::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reconstruction_residual_small(entries in proptest::collection::vec(-5.0f64..5.0, 21)) {
            let n = 6;
            let mut m = Matrix::zeros(n, n);
            let mut k = 0;
            for i in 0..n {
                for j in 0..=i {
                    m[(i, j)] = entries[k];
                    m[(j, i)] = entries[k];
                    k += 1;
                }
            }
            let eig = symmetric_eigen(&m).unwrap();
            let d = Matrix::diagonal(&eig.values);
            let rebuilt = eig.vectors.mul(&d).mul(&eig.vectors.transpose());
            prop_assert!(rebuilt.max_abs_diff(&m) <= 1e-9 * m.norm().max(1.0));
            prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
