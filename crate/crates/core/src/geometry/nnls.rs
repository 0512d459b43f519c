//! Lawson–Hanson active-set NNLS in normal-equation form.
//!
//! The solver only sees the Gram matrix `G = BᵀB` (through an accessor) and
//! `h = Bᵀv`, which lets callers project many vectors onto cones spanned by
//! subsets of one generator pool without refactoring anything.

use crate::error::{CamError, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::scalar::Scalar;

/// Relative tolerance on the dual (negative gradient) used as the stopping rule.
pub const DUAL_TOL: f64 = 1e-11;
/// Relative pivot below which a candidate column counts as linearly dependent.
pub const PIVOT_TOL: f64 = 1e-14;

/// Minimizes `½αᵀGα − hᵀα` subject to `α ≥ 0`, i.e. `‖v − Bα‖²` up to a constant.
///
/// `gram(i, j)` must return `b_iᵀ b_j` for `i, j < q`.
pub fn nnls_normal<T, G>(q: usize, gram: G, h: &[T]) -> Result<Vec<T>>
where
    T: Scalar,
    G: Fn(usize, usize) -> T,
{
    debug_assert_eq!(h.len(), q);
    let mut x = vec![T::zero(); q];
    let h_max = h.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if q == 0 || h_max == T::zero() {
        return Ok(x);
    }
    let tol = T::rel_tol(DUAL_TOL) * h_max;
    let pivot = T::rel_tol(PIVOT_TOL);
    let max_pivots = 3 * q + 50;

    let mut passive: Vec<usize> = Vec::with_capacity(q.min(16));
    let mut in_passive = vec![false; q];
    let mut rejected = vec![false; q];
    let mut pivots = 0usize;

    let solve = |set: &[usize]| -> Option<Vec<T>> {
        let p = set.len();
        let mut sub = vec![T::zero(); p * p];
        for (r, &i) in set.iter().enumerate() {
            for (c, &j) in set.iter().enumerate() {
                sub[r * p + c] = gram(i, j);
            }
        }
        let l = cholesky(&sub, p, pivot)?;
        let rhs: Vec<T> = set.iter().map(|&i| h[i]).collect();
        Some(cholesky_solve(&l, p, &rhs))
    };

    loop {
        // Entering variable: the largest positive dual among the zero set.
        let mut entering: Option<(usize, T)> = None;
        for j in 0..q {
            if in_passive[j] || rejected[j] {
                continue;
            }
            let mut w = h[j];
            for &i in &passive {
                w = w - gram(j, i) * x[i];
            }
            if w > tol && entering.map_or(true, |(_, best)| w > best) {
                entering = Some((j, w));
            }
        }
        let Some((j, _)) = entering else { break };

        pivots += 1;
        if pivots > max_pivots {
            return Err(CamError::NnlsNonConvergence(pivots));
        }

        passive.push(j);
        let mut z = match solve(&passive) {
            Some(z) if *z.last().expect("non-empty") > T::zero() => z,
            _ => {
                passive.pop();
                rejected[j] = true;
                continue;
            }
        };
        in_passive[j] = true;

        // Inner loop: step back toward feasibility until every passive coefficient is positive.
        while z.iter().any(|&zi| zi <= T::zero()) {
            pivots += 1;
            if pivots > max_pivots {
                return Err(CamError::NnlsNonConvergence(pivots));
            }
            let mut alpha = T::one();
            let mut blocking = passive[0];
            for (&p, &zi) in passive.iter().zip(&z) {
                if zi <= T::zero() {
                    let ratio = x[p] / (x[p] - zi);
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = p;
                    }
                }
            }
            for (&p, &zi) in passive.iter().zip(&z) {
                x[p] = x[p] + alpha * (zi - x[p]);
            }
            x[blocking] = T::zero();
            passive.retain(|&p| {
                let keep = p != blocking && x[p] > T::zero();
                if !keep {
                    x[p] = T::zero();
                    in_passive[p] = false;
                }
                keep
            });
            if passive.is_empty() {
                z = Vec::new();
                break;
            }
            z = solve(&passive).ok_or(CamError::NnlsNonConvergence(pivots))?;
        }
        for (&p, &zi) in passive.iter().zip(&z) {
            x[p] = zi;
        }
        rejected.iter_mut().for_each(|r| *r = false);
    }
    Ok(x)
}
