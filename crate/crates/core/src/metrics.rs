//! Accuracy against ground truth: mixing-matrix angle accuracy, source correlation
//! and correlation restricted to source-specific marker points.

use crate::error::{CamError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::stability::min_avg_angle;
use crate::unmix::select_marker_points;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult<T> {
    pub e_a: T,
    pub e_s: Option<T>,
    pub e_s_markers: Option<T>,
    /// True column `k` is matched with estimated column `pairing[k]`.
    pub pairing: Vec<usize>,
}

/// `1 − ∠(A, Â)/π` with the optimal column pairing.
pub fn eval_mixing<T: Scalar>(a_true: &Matrix<T>, a_hat: &Matrix<T>) -> Result<(T, Vec<usize>)> {
    let (theta, perm) = min_avg_angle(a_true, a_hat)?;
    Ok((T::one() - theta / T::pi(), perm))
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let n = T::of(a.len() as f64);
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).max(-T::one()).min(T::one()))
}

fn correlation_or_zero<T: Scalar>(a: &[T], b: &[T], k: usize) -> T {
    pearson(a, b).unwrap_or_else(|| {
        log::warn!("source {k} has zero variance; its correlation counts as 0");
        T::zero()
    })
}

fn check_pairing(pairing: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if pairing.len() != k || pairing.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(CamError::InvalidArgument(format!("pairing {pairing:?} is not a permutation of {k}")));
    }
    Ok(())
}

/// Mean correlation between each true source row and its paired estimated row.
pub fn eval_sources<T: Scalar>(s_true: &Matrix<T>, s_hat: &Matrix<T>, pairing: &[usize]) -> Result<T> {
    if s_true.shape() != s_hat.shape() {
        return Err(CamError::DimensionMismatch(format!("{:?} against {:?}", s_true.shape(), s_hat.shape())));
    }
    check_pairing(pairing, s_true.rows())?;
    let total: T = pairing
        .iter()
        .enumerate()
        .map(|(k, &p)| correlation_or_zero(&s_true.row(k), &s_hat.row(p), k))
        .sum();
    Ok(total / T::of(s_true.rows() as f64))
}

/// [`eval_sources`] where source `k` is scored only on the `per_source` points most
/// dominated by true source `k`.
pub fn eval_marker_patterns<T: Scalar>(
    s_true: &Matrix<T>,
    s_hat: &Matrix<T>,
    pairing: &[usize],
    per_source: usize,
) -> Result<T> {
    if s_true.shape() != s_hat.shape() {
        return Err(CamError::DimensionMismatch(format!("{:?} against {:?}", s_true.shape(), s_hat.shape())));
    }
    check_pairing(pairing, s_true.rows())?;
    let markers = select_marker_points(s_true, per_source)?;
    let total: T = pairing
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let t: Vec<T> = markers[k].iter().map(|&n| s_true[(k, n)]).collect();
            let h: Vec<T> = markers[k].iter().map(|&n| s_hat[(p, n)]).collect();
            correlation_or_zero(&t, &h, k)
        })
        .sum();
    Ok(total / T::of(s_true.rows() as f64))
}

/// All available metrics; source metrics need both source matrices.
pub fn evaluate<T: Scalar>(
    a_true: &Matrix<T>,
    a_hat: &Matrix<T>,
    sources: Option<(&Matrix<T>, &Matrix<T>)>,
    markers_per_source: Option<usize>,
) -> Result<EvalResult<T>> {
    let (e_a, pairing) = eval_mixing(a_true, a_hat)?;
    let (mut e_s, mut e_s_markers) = (None, None);
    if let Some((s_true, s_hat)) = sources {
        e_s = Some(eval_sources(s_true, s_hat, &pairing)?);
        if let Some(per) = markers_per_source {
            e_s_markers = Some(eval_marker_patterns(s_true, s_hat, &pairing, per)?);
        }
    }
    Ok(EvalResult { e_a, e_s, e_s_markers, pairing })
}
