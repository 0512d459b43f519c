//! Small dense kernels: Cholesky, cyclic Jacobi eigen-decomposition, one-sided
//! Jacobi singular values. Sizes here are tiny (mixture count, source count), so
//! simple O(n³) sweeps are the right tool.

use crate::error::{CamError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Lower Cholesky factor of a symmetric matrix stored row-major in `a` (n×n).
/// Returns `None` if a pivot falls below `rel_pivot · max diag`.
pub fn cholesky<T: Scalar>(a: &[T], n: usize, rel_pivot: T) -> Option<Vec<T>> {
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[i * n + i].abs()));
    let floor = rel_pivot * max_diag.max(T::min_positive_value());
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > floor) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky`].
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in descending order with eigenvectors as matching columns.
pub fn symmetric_eigen<T: Scalar>(m: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = m.rows();
    if m.cols() != n {
        return Err(CamError::DimensionMismatch("eigen-decomposition needs a square matrix".into()));
    }
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut total = T::zero();
        for j in 0..n {
            for i in 0..n {
                let x = a[(i, j)] * a[(i, j)];
                total = total + x;
                if i != j {
                    off = off + x;
                }
            }
        }
        if off <= eps * eps * total || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
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
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    Ok((values, v.select_columns(&order)))
}

/// Singular values (descending) by one-sided Jacobi orthogonalization of the columns.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    // Work on the orientation with more rows than columns.
    let mut a = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let n = a.cols();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = crate::scalar::norm_sq(a.col(p));
                let beta = crate::scalar::norm_sq(a.col(q));
                let gamma = crate::scalar::dot(a.col(p), a.col(q));
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let t = if zeta == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..a.rows() {
                    let x = a[(k, p)];
                    let y = a[(k, q)];
                    a[(k, p)] = c * x - s * y;
                    a[(k, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = a.col_norms();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// 2-norm condition number σ_max / σ_min over the `min(rows, cols)` singular values.
pub fn condition_number<T: Scalar>(m: &Matrix<T>) -> T {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::infinity(),
    }
}

/// Least-squares solution `(AᵀA)⁻¹ Aᵀ y` for a full-column-rank `A`.
pub fn pseudo_inverse_apply<T: Scalar>(a: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    let k = a.cols();
    let g = a.gram();
    let l = cholesky(&g.to_row_major(), k, T::epsilon())
        .ok_or(CamError::RankDeficient { k, m: a.rows() })?;
    let rhs: Vec<T> = a.columns().map(|c| crate::scalar::dot(c, y)).collect();
    Ok(cholesky_solve(&l, k, &rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2, 1e-14).unwrap();
        let x = cholesky_solve(&l, 2, &[2.0, 1.0]);
        assert_relative_eq!(4.0 * x[0] + 2.0 * x[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(2.0 * x[0] + 3.0 * x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        assert!(cholesky(&[1.0, 1.0, 1.0, 1.0], 2, 1e-12).is_none());
    }

    #[test]
    fn jacobi_eigen_diagonalizes() {
        let m = Matrix::<f64>::from_rows(&[vec![2., 1., 0.], vec![1., 2., 0.], vec![0., 0., 5.]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&m).unwrap();
        assert_relative_eq!(vals[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(vals[2], 1.0, epsilon = 1e-12);
        for (k, &lambda) in vals.iter().enumerate() {
            let v = vecs.col(k);
            let mv = m.mul_vec(v);
            for i in 0..3 {
                assert_relative_eq!(mv[i], lambda * v[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = Matrix::<f64>::from_rows(&[vec![3., 0.], vec![0., -4.], vec![0., 0.]]).unwrap();
        let sv = singular_values(&m);
        assert_relative_eq!(sv[0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(sv[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(condition_number(&m), 4.0 / 3.0, epsilon = 1e-12);
    }
}
