//! Mixture normalization and small-norm filtering.

use crate::error::{CamError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Default fraction of lowest-norm data points discarded before clustering.
pub const DEFAULT_REMOVE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport<T> {
    /// Original column indices of the retained points, strictly increasing.
    pub kept_indices: Vec<usize>,
    pub removed_count: usize,
    /// Original row sums; multiplying row `m` by `row_scales[m]` undoes the scaling.
    pub row_scales: Vec<T>,
}

/// Scales every row (mixture) to unit sum. Returns the scaled matrix and the row sums.
pub fn unit_sum_scale<T: Scalar>(x: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>)> {
    let sums = x.row_sums();
    if let Some((row, &sum)) = sums.iter().enumerate().find(|(_, s)| !(**s > T::zero())) {
        return Err(CamError::NonPositiveRowSum { row, sum: sum.as_f64() });
    }
    let mut out = x.clone();
    for j in 0..out.cols() {
        for (v, &s) in out.col_mut(j).iter_mut().zip(&sums) {
            *v = *v / s;
        }
    }
    Ok((out, sums))
}

/// Removes the `⌊fraction · N⌋` columns of smallest Euclidean norm. Ties in norm
/// remove the lower column index first; surviving columns keep their order.
pub fn filter_small_norms<T: Scalar>(
    x: &Matrix<T>,
    remove_fraction: f64,
) -> Result<(Matrix<T>, PreprocessReport<T>)> {
    if !(0.0..1.0).contains(&remove_fraction) {
        return Err(CamError::InvalidArgument(format!(
            "remove fraction {remove_fraction} outside [0, 1)"
        )));
    }
    let n = x.cols();
    let removed_count = (remove_fraction * n as f64).floor() as usize;
    let norms = x.col_norms();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        norms[a].partial_cmp(&norms[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut kept_indices: Vec<usize> = order[removed_count..].to_vec();
    kept_indices.sort_unstable();
    if kept_indices.len() < 2 {
        return Err(CamError::TooFewPoints { kept: kept_indices.len(), needed: 2 });
    }
    let filtered = x.select_columns(&kept_indices);
    let report = PreprocessReport {
        kept_indices,
        removed_count,
        row_scales: vec![T::one(); x.rows()],
    };
    Ok((filtered, report))
}

/// Unit-sum scaling followed by small-norm filtering.
pub fn preprocess<T: Scalar>(
    x: &Matrix<T>,
    remove_fraction: f64,
) -> Result<(Matrix<T>, PreprocessReport<T>)> {
    if x.rows() < 2 {
        return Err(CamError::InvalidArgument(format!("need at least 2 mixtures, got {}", x.rows())));
    }
    let (scaled, row_scales) = unit_sum_scale(x)?;
    let (filtered, mut report) = filter_small_norms(&scaled, remove_fraction)?;
    report.row_scales = row_scales;
    Ok((filtered, report))
}
