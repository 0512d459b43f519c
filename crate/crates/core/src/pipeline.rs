//! End-to-end decomposition: preprocessing, sector clustering, edge detection,
//! K-edge selection, optional source-number selection and source recovery.

use crate::clustering::{fit_sectors, SectorModel};
use crate::error::{CamError, Result};
use crate::geometry::{angle_unchecked, dedup_directions};
use crate::matrix::Matrix;
use crate::preprocess::{preprocess, unit_sum_scale, PreprocessReport, DEFAULT_REMOVE_FRACTION};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::stability::{stability_select, StabilityProfile};
use crate::unmix::{
    detect_edges, mixing_from_rays, recover_sources, select_from_pool, SearchStrategy, DEFAULT_BB_THRESHOLD,
    DEFAULT_TAU,
};

/// Central rays closer than this many radians are treated as one direction.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CamConfig {
    pub sectors: usize,
    pub restarts: usize,
    pub tau: f64,
    pub remove_fraction: f64,
    pub bb_threshold: u64,
    pub dedup_tol: f64,
}

impl Default for CamConfig {
    fn default() -> Self {
        CamConfig {
            sectors: 30,
            restarts: 20,
            tau: DEFAULT_TAU,
            remove_fraction: DEFAULT_REMOVE_FRACTION,
            bb_threshold: DEFAULT_BB_THRESHOLD,
            dedup_tol: DEFAULT_DEDUP_TOL,
        }
    }
}

impl CamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sectors == 0 || self.restarts == 0 {
            return Err(CamError::InvalidArgument("sectors and restarts must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(CamError::InvalidArgument(format!("tau must be positive, got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.remove_fraction) {
            return Err(CamError::InvalidArgument(format!(
                "remove fraction {} outside [0, 1)",
                self.remove_fraction
            )));
        }
        if !(self.dedup_tol >= 0.0) {
            return Err(CamError::InvalidArgument("dedup tolerance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn strategy(&self) -> SearchStrategy {
        SearchStrategy::Auto { threshold: self.bb_threshold }
    }
}

/// Central rays with duplicate directions merged: a dropped ray's sector size is
/// credited to the nearest surviving ray.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRays<T> {
    pub rays: Matrix<T>,
    pub sizes: Vec<usize>,
    /// Column of the clustering's ray matrix behind each reduced ray.
    pub source_index: Vec<usize>,
}

pub fn reduce_rays<T: Scalar>(model: &SectorModel<T>, tol: T) -> ReducedRays<T> {
    let keep = dedup_directions(&model.rays, tol);
    let mut sizes: Vec<usize> = keep.iter().map(|&j| model.sector_sizes[j]).collect();
    for j in 0..model.rays.cols() {
        if keep.contains(&j) {
            continue;
        }
        let nearest = (0..keep.len())
            .min_by(|&a, &b| {
                let da = angle_unchecked(model.rays.col(j), model.rays.col(keep[a]));
                let db = angle_unchecked(model.rays.col(j), model.rays.col(keep[b]));
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("dedup keeps at least one ray");
        sizes[nearest] += model.sector_sizes[j];
    }
    ReducedRays { rays: model.rays.select_columns(&keep), sizes, source_index: keep }
}

/// Edge selection result on reduced rays.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFit<T> {
    /// M×K estimate in the space the rays live in.
    pub a_hat: Matrix<T>,
    /// Columns of the reduced ray matrix that are lateral edges.
    pub edges: Vec<usize>,
    /// Columns of the reduced ray matrix selected as mixing columns.
    pub selected: Vec<usize>,
    pub fit_error: T,
}

/// Detects edges on `reduced` and selects the best K of them. With `fallback`,
/// too few edges widens the candidate pool to every reduced ray instead of failing.
pub fn fit_edges<T: Scalar>(reduced: &ReducedRays<T>, k: usize, config: &CamConfig, fallback: bool) -> Result<EdgeFit<T>> {
    let edges = detect_edges(&reduced.rays, T::of(config.tau))?.ray_indices;
    let pool: Vec<usize> = if edges.len() >= k {
        edges.clone()
    } else if fallback {
        log::debug!("only {} edges for K = {k}; selecting among all {} rays", edges.len(), reduced.rays.cols());
        (0..reduced.rays.cols()).collect()
    } else {
        return Err(CamError::InsufficientEdges { found: edges.len(), k });
    };
    let (selected, fit_error) = select_from_pool(&reduced.rays, &reduced.sizes, &pool, k, config.strategy())?;
    Ok(EdgeFit { a_hat: mixing_from_rays(&reduced.rays, &selected), edges, selected, fit_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceCount {
    Fixed(usize),
    /// Pick K in `2..=k_max` by stability analysis over `trials` cross-validations.
    Select { k_max: usize, trials: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    /// M×K mixing estimate in the units of the input data, so that `Â Ŝ ≈ X`.
    pub a_hat: Matrix<T>,
    /// The estimate in unit-row-sum space, columns scaled to unit element sum.
    pub a_hat_scaled: Matrix<T>,
    /// K×N sources; absent when K > M.
    pub s_hat: Option<Matrix<T>>,
    pub k: usize,
    /// Clustering ray indices of the detected lateral edges.
    pub edges: Vec<usize>,
    /// Clustering ray indices of the selected mixing columns.
    pub selected_edges: Vec<usize>,
    pub fit_error: T,
    pub model: SectorModel<T>,
    pub preprocess: PreprocessReport<T>,
    pub profile: Option<StabilityProfile<T>>,
}

pub fn decompose<T: Scalar>(x: &Matrix<T>, count: SourceCount, config: &CamConfig, seed: u64) -> Result<Decomposition<T>> {
    config.validate()?;
    if !x.is_finite() {
        return Err(CamError::InvalidArgument("observation matrix has non-finite entries".into()));
    }
    let (xp, report) = preprocess(x, config.remove_fraction)?;
    if xp.cols() < config.sectors {
        return Err(CamError::TooFewPoints { kept: xp.cols(), needed: config.sectors });
    }
    let (k, profile) = match count {
        SourceCount::Fixed(k) => {
            if k == 0 {
                return Err(CamError::InvalidArgument("source count must be positive".into()));
            }
            (k, None)
        }
        SourceCount::Select { k_max, trials } => {
            let p = stability_select(&xp, k_max, trials, config, derive_seed(seed, "stability", &[]))?;
            (p.recommended_k, Some(p))
        }
    };
    let model = fit_sectors(&xp, config.sectors, config.restarts, derive_seed(seed, "cluster", &[]))?;
    let reduced = reduce_rays(&model, T::of(config.dedup_tol));
    let fit = fit_edges(&reduced, k, config, false)?;

    let (scaled_x, _) = unit_sum_scale(x)?;
    let s_hat = if k > x.rows() {
        log::warn!("K = {k} exceeds M = {}: sources are not recoverable, only the mixing matrix is estimated", x.rows());
        None
    } else {
        Some(recover_sources(&scaled_x, &fit.a_hat)?.s_hat)
    };
    let mut a_hat = fit.a_hat.clone();
    for j in 0..k {
        a_hat.col_mut(j).iter_mut().zip(&report.row_scales).for_each(|(v, &r)| *v = *v * r);
    }
    Ok(Decomposition {
        a_hat,
        a_hat_scaled: fit.a_hat,
        s_hat,
        k,
        edges: fit.edges.iter().map(|&j| reduced.source_index[j]).collect(),
        selected_edges: fit.selected.iter().map(|&j| reduced.source_index[j]).collect(),
        fit_error: fit.fit_error,
        model,
        preprocess: report,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_matches_documented_values() {
        let c = CamConfig::default();
        assert_eq!((c.sectors, c.restarts, c.tau, c.remove_fraction, c.bb_threshold), (30, 20, 0.001, 0.5, 50_000));
        assert!(c.validate().is_ok());
        assert!(CamConfig { tau: 0.0, ..c.clone() }.validate().is_err());
        assert!(CamConfig { remove_fraction: 1.0, ..c }.validate().is_err());
    }

    #[test]
    fn duplicate_rays_merge_sizes() {
        let rays = Matrix::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let model = SectorModel {
            rays,
            assignment: vec![0, 1, 2],
            sector_sizes: vec![2, 3, 4],
            distortion: 0.0,
            iterations: 1,
            hit_iteration_cap: false,
            restart: 0,
        };
        let r = reduce_rays(&model, 1e-8);
        assert_eq!(r.source_index, vec![0, 1]);
        assert_eq!(r.sizes, vec![6, 3]);
    }
}
