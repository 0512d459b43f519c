//! Source-number selection by stability analysis: repeated two-fold
//! cross-validation scored with the normalized model instability (NMI) index.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::assignment::hungarian;
use crate::clustering::fit_sectors;
use crate::error::{CamError, Result};
use crate::geometry::angle_unchecked;
use crate::matrix::Matrix;
use crate::pipeline::{fit_edges, reduce_rays, CamConfig};
use crate::rng::{child_rng, derive_seed};
use crate::scalar::Scalar;
use crate::unmix::mixing_from_rays;

/// Minimum over column pairings of the average angle between matched columns of
/// `u` and `w`. Returns the angle and `perm`, with `u` column `k` matched to `w`
/// column `perm[k]`.
pub fn min_avg_angle<T: Scalar>(u: &Matrix<T>, w: &Matrix<T>) -> Result<(T, Vec<usize>)> {
    if u.shape() != w.shape() {
        return Err(CamError::DimensionMismatch(format!("{:?} against {:?}", u.shape(), w.shape())));
    }
    let k = u.cols();
    if k == 0 {
        return Err(CamError::InvalidArgument("matrices have no columns".into()));
    }
    let cost: Vec<Vec<T>> =
        (0..k).map(|i| (0..k).map(|j| angle_unchecked(u.col(i), w.col(j))).collect()).collect();
    let perm = hungarian(&cost);
    let total: T = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok((total / T::of(k as f64), perm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProfile<T> {
    pub k_range: Vec<usize>,
    pub nmi: Vec<T>,
    pub trials: usize,
    /// `[trial][k]`: angle between the two fold estimates.
    pub per_trial_angles: Vec<Vec<T>>,
    /// `[trial][k]`: fold-1 estimate against fold-2 random rays, and fold-1 random
    /// rays against the fold-2 estimate.
    pub per_trial_random_angles: Vec<Vec<[T; 2]>>,
    pub recommended_k: usize,
}

impl<T: Scalar> StabilityProfile<T> {
    pub fn nmi_for(&self, k: usize) -> Option<T> {
        self.k_range.iter().position(|&c| c == k).map(|i| self.nmi[i])
    }
}

/// NMI per candidate K from per-trial terms: twice the summed fold-to-fold angles
/// over the summed random-baseline angles.
pub fn nmi_from_terms<T: Scalar>(angles: &[Vec<T>], random: &[Vec<[T; 2]>], k_count: usize) -> Vec<T> {
    (0..k_count)
        .map(|i| {
            let num: T = angles.iter().map(|t| t[i]).sum();
            let den: T = random.iter().map(|t| t[i][0] + t[i][1]).sum();
            if den > T::zero() {
                T::of(2.0) * num / den
            } else if num == T::zero() {
                T::zero()
            } else {
                T::infinity()
            }
        })
        .collect()
}

fn argmin_k<T: Scalar>(k_range: &[usize], nmi: &[T]) -> usize {
    let mut best = 0;
    for i in 1..nmi.len() {
        if nmi[i] < nmi[best] {
            best = i;
        }
    }
    k_range[best]
}

/// Mixing estimates of one fold for every candidate K, plus its sector central rays.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAnalysis<T> {
    pub rays: Matrix<T>,
    pub estimates: Vec<Matrix<T>>,
}

/// Clusters one fold and estimates the mixing matrix for each K in `k_range`. When a
/// fold has fewer edges than K, the K columns are chosen among all its rays.
pub fn analyze_fold<T: Scalar>(
    x: &Matrix<T>,
    k_range: &[usize],
    config: &CamConfig,
    seed: u64,
) -> Result<FoldAnalysis<T>> {
    if x.cols() < config.sectors {
        return Err(CamError::FoldTooSmall { fold_size: x.cols(), sectors: config.sectors });
    }
    let model = fit_sectors(x, config.sectors, config.restarts, seed)?;
    let reduced = reduce_rays(&model, T::of(config.dedup_tol));
    let estimates = k_range
        .iter()
        .map(|&k| fit_edges(&reduced, k, config, true).map(|f| f.a_hat))
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldAnalysis { rays: model.rays, estimates })
}

fn random_estimate<T: Scalar>(rays: &Matrix<T>, k: usize, seed: u64, trial: usize, fold: u64) -> Matrix<T> {
    let mut rng = child_rng(seed, "stability-random", &[trial as u64, k as u64, fold]);
    let mut pick = sample(&mut rng, rays.cols(), k).into_vec();
    pick.sort_unstable();
    mixing_from_rays(rays, &pick)
}

/// Uniform random split: fold 1 gets `ceil(N/2)` points. Both folds are ascending.
pub fn random_folds(n: usize, seed: u64, trial: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut child_rng(seed, "stability-fold", &[trial as u64]));
    let mut first = idx[..n.div_ceil(2)].to_vec();
    let mut second = idx[n.div_ceil(2)..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}

/// Stability analysis over K = 2..=k_max with `trials` random two-fold splits of the
/// (already preprocessed) data.
pub fn stability_select<T: Scalar>(
    x: &Matrix<T>,
    k_max: usize,
    trials: usize,
    config: &CamConfig,
    seed: u64,
) -> Result<StabilityProfile<T>> {
    let n = x.cols();
    stability_select_with(x, k_max, trials, config, seed, |trial| random_folds(n, seed, trial))
}

/// [`stability_select`] with caller-supplied folds for each trial.
pub fn stability_select_with<T, F>(
    x: &Matrix<T>,
    k_max: usize,
    trials: usize,
    config: &CamConfig,
    seed: u64,
    folds: F,
) -> Result<StabilityProfile<T>>
where
    T: Scalar,
    F: Fn(usize) -> (Vec<usize>, Vec<usize>) + Sync,
{
    config.validate()?;
    if k_max < 2 {
        return Err(CamError::InvalidArgument(format!("k_max must be at least 2, got {k_max}")));
    }
    if config.sectors < k_max {
        return Err(CamError::InvalidArgument(format!(
            "{} sectors cannot supply {k_max} random rays",
            config.sectors
        )));
    }
    if trials == 0 {
        return Err(CamError::InvalidArgument("trials must be positive".into()));
    }
    let k_range: Vec<usize> = (2..=k_max).collect();
    let results: Vec<Result<(Vec<T>, Vec<[T; 2]>)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let (f1, f2) = folds(trial);
            let cluster_seed = derive_seed(seed, "stability-cluster", &[trial as u64]);
            let a1 = analyze_fold(&x.select_columns(&f1), &k_range, config, cluster_seed)?;
            let a2 = analyze_fold(&x.select_columns(&f2), &k_range, config, cluster_seed)?;
            let mut angles = Vec::with_capacity(k_range.len());
            let mut random = Vec::with_capacity(k_range.len());
            for (i, &k) in k_range.iter().enumerate() {
                angles.push(min_avg_angle(&a1.estimates[i], &a2.estimates[i])?.0);
                let r1 = random_estimate(&a1.rays, k, seed, trial, 1);
                let r2 = random_estimate(&a2.rays, k, seed, trial, 2);
                random.push([
                    min_avg_angle(&a1.estimates[i], &r2)?.0,
                    min_avg_angle(&r1, &a2.estimates[i])?.0,
                ]);
            }
            Ok((angles, random))
        })
        .collect();
    let mut per_trial_angles = Vec::with_capacity(trials);
    let mut per_trial_random_angles = Vec::with_capacity(trials);
    for r in results {
        let (a, b) = r?;
        per_trial_angles.push(a);
        per_trial_random_angles.push(b);
    }
    let nmi = nmi_from_terms(&per_trial_angles, &per_trial_random_angles, k_range.len());
    let recommended_k = argmin_k(&k_range, &nmi);
    Ok(StabilityProfile { k_range, nmi, trials, per_trial_angles, per_trial_random_angles, recommended_k })
}
