//! Convex-cone geometry: angles between vectors, projection onto finitely generated
//! cones, and removal of duplicate directions.

mod nnls;

pub use nnls::nnls_normal;

use crate::error::{CamError, Result};
use crate::matrix::Matrix;
use crate::scalar::{dot, norm, Scalar};

/// Angle between `u` and `v` in radians, in `[0, π]`.
///
/// A non-zero vector makes an angle of π with the zero vector; two zero vectors
/// make an angle of 0.
pub fn angle<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(CamError::DimensionMismatch(format!(
            "angle between vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(angle_unchecked(u, v))
}

/// [`angle`] without the length check.
///
/// Uses `2·atan2(‖û − v̂‖, ‖û + v̂‖)`, which equals the clamped arccos of the cosine
/// but keeps full precision for nearly parallel vectors.
pub(crate) fn angle_unchecked<T: Scalar>(u: &[T], v: &[T]) -> T {
    let nu = norm(u);
    let nv = norm(v);
    match (nu > T::zero(), nv > T::zero()) {
        (false, false) => return T::zero(),
        (true, false) | (false, true) => return T::pi(),
        _ => {}
    }
    let (mut diff, mut sum) = (T::zero(), T::zero());
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff = diff + (a - b) * (a - b);
        sum = sum + (a + b) * (a + b);
    }
    let theta = T::of(2.0) * diff.sqrt().atan2(sum.sqrt());
    theta.max(T::zero()).min(T::pi())
}

/// Generators `b_1 … b_Q` of a convex cone, stored as matrix columns.
#[derive(Debug, Clone)]
pub struct ConeBasis<T> {
    generators: Matrix<T>,
    gram: Matrix<T>,
}

impl<T: Scalar> ConeBasis<T> {
    pub fn new(generators: Matrix<T>) -> Result<Self> {
        if generators.cols() == 0 || generators.rows() == 0 {
            return Err(CamError::InvalidArgument("cone basis needs at least one generator".into()));
        }
        if !generators.is_finite() {
            return Err(CamError::InvalidArgument("cone generators must be finite".into()));
        }
        if let Some(j) = generators.columns().position(|c| c.iter().all(|&x| x == T::zero())) {
            return Err(CamError::InvalidArgument(format!("generator {j} is the zero vector")));
        }
        let gram = generators.gram();
        Ok(ConeBasis { generators, gram })
    }

    pub fn generators(&self) -> &Matrix<T> {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators.rows()
    }

    pub fn len(&self) -> usize {
        self.generators.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Result of projecting a vector onto a cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T> {
    pub image: Vec<T>,
    pub coefficients: Vec<T>,
    pub angle: T,
}

/// `argmin_{α ≥ 0} ‖v − Bα‖²`.
pub fn nnls<T: Scalar>(basis: &ConeBasis<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != basis.dim() {
        return Err(CamError::DimensionMismatch(format!(
            "vector of length {} against {}-dimensional cone",
            v.len(),
            basis.dim()
        )));
    }
    let h: Vec<T> = basis.generators.columns().map(|c| dot(c, v)).collect();
    let g = &basis.gram;
    nnls_normal(basis.len(), |i, j| g[(i, j)], &h)
}

pub fn project_onto_cone<T: Scalar>(v: &[T], basis: &ConeBasis<T>) -> Result<Projection<T>> {
    let coefficients = nnls(basis, v)?;
    let image = basis.generators.mul_vec(&coefficients);
    let angle = angle_unchecked(v, &image);
    Ok(Projection { image, coefficients, angle })
}

/// Projections of members of a fixed vector pool onto cones spanned by subsets of
/// the same pool, sharing one Gram matrix.
#[derive(Debug, Clone)]
pub struct PoolProjector<'a, T> {
    pool: &'a Matrix<T>,
    gram: Matrix<T>,
}

impl<'a, T: Scalar> PoolProjector<'a, T> {
    pub fn new(pool: &'a Matrix<T>) -> Self {
        PoolProjector { pool, gram: pool.gram() }
    }

    pub fn pool(&self) -> &Matrix<T> {
        self.pool
    }

    /// Projects pool column `target` onto the cone of pool columns `subset`.
    pub fn project_member(&self, target: usize, subset: &[usize]) -> Result<Projection<T>> {
        let h: Vec<T> = subset.iter().map(|&i| self.gram[(i, target)]).collect();
        let coefficients = nnls_normal(subset.len(), |a, b| self.gram[(subset[a], subset[b])], &h)?;
        let mut image = vec![T::zero(); self.pool.rows()];
        for (&i, &c) in subset.iter().zip(&coefficients) {
            if c != T::zero() {
                for (d, &x) in image.iter_mut().zip(self.pool.col(i)) {
                    *d = *d + c * x;
                }
            }
        }
        let angle = angle_unchecked(self.pool.col(target), &image);
        Ok(Projection { image, coefficients, angle })
    }

    /// Projection angle only.
    pub fn member_angle(&self, target: usize, subset: &[usize]) -> Result<T> {
        if subset.contains(&target) {
            return Ok(T::zero());
        }
        Ok(self.project_member(target, subset)?.angle)
    }
}

/// Indices (ascending) of a maximal set of columns in which no two columns subtend
/// an angle below `tol`. Among near-colinear columns the largest-norm one is kept
/// (ties go to the lower index).
pub fn dedup_directions<T: Scalar>(points: &Matrix<T>, tol: T) -> Vec<usize> {
    let norms = points.col_norms();
    let mut order: Vec<usize> = (0..points.cols()).collect();
    order.sort_by(|&a, &b| {
        norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for &j in &order {
        let c = points.col(j);
        if kept.iter().all(|&k| !(angle_unchecked(points.col(k), c) < tol)) {
            kept.push(j);
        }
    }
    kept.sort_unstable();
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn angle_identity_and_orthogonal() {
        let v = [0.3, -1.2, 2.0];
        assert_eq!(angle(&v, &v).unwrap(), 0.0);
        assert_relative_eq!(angle(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn angle_with_zero_vector() {
        assert_eq!(angle(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap(), PI);
        assert_eq!(angle(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(angle(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn angle_antiparallel_is_pi() {
        assert_relative_eq!(angle(&[1.0, 1.0], &[-2.0, -2.0]).unwrap(), PI, epsilon = 1e-15);
    }

    #[test]
    fn projection_of_member_is_identity() {
        let b = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.0], vec![0.5, 0.5]]).unwrap();
        let basis = ConeBasis::new(b.clone()).unwrap();
        let v: Vec<f64> = (0..3).map(|i| b[(i, 0)] + 2.0 * b[(i, 1)]).collect();
        let p = project_onto_cone(&v, &basis).unwrap();
        for i in 0..3 {
            assert_relative_eq!(p.image[i], v[i], epsilon = 1e-12);
        }
        assert!(p.angle < 1e-10);
        assert_relative_eq!(p.coefficients[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(p.coefficients[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn projection_onto_coordinate_plane() {
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let p = project_onto_cone(&[1.0, 1.0, 1.0], &ConeBasis::new(b).unwrap()).unwrap();
        assert_eq!(p.image, vec![1.0, 1.0, 0.0]);
        assert_relative_eq!(p.angle, (2f64.sqrt() / 3f64.sqrt()).acos(), epsilon = 1e-14);
    }

    #[test]
    fn outside_cone_projects_to_origin() {
        let b = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let p = project_onto_cone(&[-1.0, -1.0], &ConeBasis::new(b).unwrap()).unwrap();
        assert_eq!(p.image, vec![0.0, 0.0]);
        assert_eq!(p.angle, PI);
    }

    #[test]
    fn basis_rejects_zero_generator() {
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(ConeBasis::new(b).is_err());
    }

    #[test]
    fn dedup_collapses_positive_scalings() {
        let pts = Matrix::from_columns(2, &[vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(dedup_directions(&pts, 1e-9), vec![1, 2]);
    }

    #[test]
    fn dedup_keeps_distinct_directions() {
        let pts = Matrix::from_columns(2, &[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(dedup_directions(&pts, 1e-3), vec![0, 1, 2]);
    }

    #[test]
    fn works_in_single_precision() {
        let b = Matrix::<f32>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = project_onto_cone(&[3.0f32, -2.0], &ConeBasis::new(b).unwrap()).unwrap();
        assert_eq!(p.coefficients, vec![3.0, 0.0]);
    }
}
