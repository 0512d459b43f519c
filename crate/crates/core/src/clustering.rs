//! Sector-based clustering: a generalized Lloyd iteration that groups data points
//! around unit-norm central rays, minimizing the total squared point-to-ray distance.

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{CamError, Result};
use crate::geometry::angle_unchecked;
use crate::matrix::Matrix;
use crate::rng::child_rng;
use crate::scalar::{dot, norm_sq, Scalar};

/// Hard cap on assignment/update rounds per restart.
pub const MAX_ITERATIONS: usize = 500;
/// Power iteration stops once successive iterates differ by less than this angle.
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 1000;
/// Relative distortion change treated as "unchanged".
pub const DISTORTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SectorModel<T> {
    /// Unit-norm central rays, one column per sector.
    pub rays: Matrix<T>,
    /// Sector index of every data point.
    pub assignment: Vec<usize>,
    pub sector_sizes: Vec<usize>,
    pub distortion: T,
    pub iterations: usize,
    pub hit_iteration_cap: bool,
    /// Which restart produced this model.
    pub restart: usize,
}

impl<T: Scalar> SectorModel<T> {
    pub fn sectors(&self) -> usize {
        self.rays.cols()
    }

    /// Number of points whose angle with their own central ray exceeds 90°.
    pub fn obtuse_points(&self, x: &Matrix<T>) -> usize {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(n, &j)| dot(x.col(n), self.rays.col(j)) < T::zero())
            .count()
    }
}

/// `‖x − (rᵀx) r‖` for a unit-norm ray `r`.
pub fn point_to_ray_distance<T: Scalar>(x: &[T], r: &[T]) -> T {
    let p = dot(r, x);
    x.iter()
        .zip(r)
        .fold(T::zero(), |acc, (&xi, &ri)| {
            let d = xi - p * ri;
            acc + d * d
        })
        .sqrt()
}

#[inline]
fn dist_sq<T: Scalar>(x_norm_sq: T, x: &[T], r: &[T]) -> T {
    let p = dot(r, x);
    (x_norm_sq - p * p).max(T::zero())
}

/// Total clustering distortion `Σ_j Σ_{n∈ψ_j} ‖x_n − r_jᵀx_n r_j‖²`.
pub fn distortion<T: Scalar>(x: &Matrix<T>, rays: &Matrix<T>, assignment: &[usize]) -> T {
    assignment
        .iter()
        .enumerate()
        .map(|(n, &j)| {
            let d = point_to_ray_distance(x.col(n), rays.col(j));
            d * d
        })
        .sum()
}

fn autocorrelation<T: Scalar>(points: &[&[T]]) -> Matrix<T> {
    let m = points.first().map_or(0, |p| p.len());
    let mut c = Matrix::zeros(m, m);
    for p in points {
        for j in 0..m {
            let pj = p[j];
            if pj == T::zero() {
                continue;
            }
            let col = c.col_mut(j);
            for i in 0..m {
                col[i] = col[i] + p[i] * pj;
            }
        }
    }
    c
}

fn rayleigh<T: Scalar>(c: &Matrix<T>, r: &[T]) -> T {
    dot(r, &c.mul_vec(r))
}

/// Principal eigenvector of `C = Σ x xᵀ` over the sector's points, by power
/// iteration started from the sector mean. The sign makes the ray's inner product
/// with the mean non-negative.
pub fn update_ray<T: Scalar>(points: &[&[T]]) -> Result<Vec<T>> {
    let m = points.first().map_or(0, |p| p.len());
    if m == 0 {
        return Err(CamError::InvalidArgument("update_ray needs a non-empty sector".into()));
    }
    let c = autocorrelation(points);
    principal_eigenvector(&c, points)
}

fn principal_eigenvector<T: Scalar>(c: &Matrix<T>, points: &[&[T]]) -> Result<Vec<T>> {
    let m = c.rows();
    let mut mean = vec![T::zero(); m];
    let mut total_norm = T::zero();
    for p in points {
        for (s, &v) in mean.iter_mut().zip(p.iter()) {
            *s = *s + v;
        }
        total_norm = total_norm + norm_sq(p).sqrt();
    }
    if total_norm == T::zero() {
        return Err(CamError::DegenerateSector);
    }
    let mean_norm = norm_sq(&mean).sqrt();
    let reference: Vec<T> = if mean_norm > T::rel_tol(1e-12) * total_norm {
        mean
    } else {
        points
            .iter()
            .find(|p| p.iter().any(|&v| v != T::zero()))
            .map(|p| p.to_vec())
            .ok_or(CamError::DegenerateSector)?
    };
    let ref_norm = norm_sq(&reference).sqrt();
    let mut v: Vec<T> = reference.iter().map(|&x| x / ref_norm).collect();
    let tol = T::rel_tol(POWER_TOL);
    for _ in 0..POWER_MAX_ITERATIONS {
        let w = c.mul_vec(&v);
        let wn = norm_sq(&w).sqrt();
        if !(wn > T::zero()) {
            break;
        }
        let next: Vec<T> = w.iter().map(|&x| x / wn).collect();
        let delta = angle_unchecked(&next, &v);
        v = next;
        if delta < tol {
            break;
        }
    }
    if dot(&v, &reference) < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(v)
}

/// Runs one Lloyd alternation from the given initial ray points. Returns the
/// converged model and the distortion after every update step.
pub fn run_restart<T: Scalar>(x: &Matrix<T>, init: &[usize]) -> Result<(SectorModel<T>, Vec<T>)> {
    let (m, n) = x.shape();
    let j_count = init.len();
    if j_count == 0 || n < j_count {
        return Err(CamError::TooFewPoints { kept: n, needed: j_count.max(1) });
    }
    let norms_sq: Vec<T> = x.columns().map(norm_sq).collect();
    let mut rays = Matrix::zeros(m, j_count);
    for (j, &idx) in init.iter().enumerate() {
        let c = x.col(idx);
        let nrm = norms_sq[idx].sqrt();
        if !(nrm > T::zero()) {
            return Err(CamError::InvalidArgument(format!("initial ray point {idx} is zero")));
        }
        rays.col_mut(j).iter_mut().zip(c).for_each(|(r, &v)| *r = v / nrm);
    }

    let mut assignment = vec![usize::MAX; n];
    let mut point_dist = vec![T::zero(); n];
    let mut history: Vec<T> = Vec::new();
    let mut iterations = 0;
    let mut hit_cap = true;
    let rel = T::rel_tol(DISTORTION_TOL);

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // Assignment to the nearest ray; ties go to the lowest sector index.
        let mut changed = false;
        for p in 0..n {
            let xp = x.col(p);
            let mut best = 0;
            let mut best_d = T::infinity();
            for j in 0..j_count {
                let d = dist_sq(norms_sq[p], xp, rays.col(j));
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if assignment[p] != best {
                changed = true;
                assignment[p] = best;
            }
            point_dist[p] = best_d;
        }

        let mut sizes = vec![0usize; j_count];
        for &a in &assignment {
            sizes[a] += 1;
        }
        // Empty sectors take over the currently worst-fitted points.
        if sizes.contains(&0) {
            let mut by_dist: Vec<usize> = (0..n).collect();
            by_dist.sort_by(|&a, &b| {
                point_dist[b].partial_cmp(&point_dist[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            });
            let mut cursor = by_dist.into_iter();
            for j in 0..j_count {
                if sizes[j] != 0 {
                    continue;
                }
                for p in cursor.by_ref() {
                    let from = assignment[p];
                    if sizes[from] > 1 && norms_sq[p] > T::zero() {
                        sizes[from] -= 1;
                        sizes[j] = 1;
                        assignment[p] = j;
                        point_dist[p] = T::zero();
                        changed = true;
                        break;
                    }
                }
            }
        }

        if !changed && !history.is_empty() {
            hit_cap = false;
            break;
        }

        // Ray update: principal eigenvector of each sector's autocorrelation.
        let mut members: Vec<Vec<&[T]>> = vec![Vec::new(); j_count];
        for (p, &a) in assignment.iter().enumerate() {
            members[a].push(x.col(p));
        }
        for (j, pts) in members.iter().enumerate() {
            if pts.is_empty() {
                continue;
            }
            let c = autocorrelation(pts);
            if let Ok(r) = principal_eigenvector(&c, pts) {
                // Keep the old ray if power iteration did not improve on it.
                if rayleigh(&c, &r) >= rayleigh(&c, rays.col(j)) {
                    rays.col_mut(j).copy_from_slice(&r);
                }
            }
        }

        let d: T = (0..n).map(|p| dist_sq(norms_sq[p], x.col(p), rays.col(assignment[p]))).sum();
        let stop = history.last().is_some_and(|&prev: &T| prev - d <= rel * prev.max(T::min_positive_value()));
        history.push(d);
        if stop {
            hit_cap = false;
            break;
        }
    }

    let mut sector_sizes = vec![0usize; j_count];
    for &a in &assignment {
        sector_sizes[a] += 1;
    }
    let distortion = distortion(x, &rays, &assignment);
    let model = SectorModel {
        rays,
        assignment,
        sector_sizes,
        distortion,
        iterations,
        hit_iteration_cap: hit_cap,
        restart: 0,
    };
    Ok((model, history))
}

/// Best-of-`restarts` sector clustering. Restart `r` draws its initial rays from
/// J distinct data points using the seed derived from `(seed, r)`; the lowest
/// distortion wins, ties going to the lowest restart index.
pub fn fit_sectors<T: Scalar>(
    x: &Matrix<T>,
    sectors: usize,
    restarts: usize,
    seed: u64,
) -> Result<SectorModel<T>> {
    Ok(fit_sectors_traced(x, sectors, restarts, seed)?.0)
}

/// [`fit_sectors`] that also returns the distortion history of every restart.
pub fn fit_sectors_traced<T: Scalar>(
    x: &Matrix<T>,
    sectors: usize,
    restarts: usize,
    seed: u64,
) -> Result<(SectorModel<T>, Vec<Vec<T>>)> {
    if sectors == 0 || restarts == 0 {
        return Err(CamError::InvalidArgument("sector and restart counts must be positive".into()));
    }
    let candidates: Vec<usize> = (0..x.cols()).filter(|&n| x.col(n).iter().any(|&v| v != T::zero())).collect();
    if candidates.len() < sectors {
        return Err(CamError::TooFewPoints { kept: candidates.len(), needed: sectors });
    }
    let runs: Vec<Result<(SectorModel<T>, Vec<T>)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = child_rng(seed, "sector-restart", &[r as u64]);
            let init: Vec<usize> =
                sample(&mut rng, candidates.len(), sectors).into_iter().map(|i| candidates[i]).collect();
            run_restart(x, &init).map(|(mut model, hist)| {
                model.restart = r;
                (model, hist)
            })
        })
        .collect();

    let mut best: Option<SectorModel<T>> = None;
    let mut histories = Vec::with_capacity(restarts);
    for run in runs {
        let (model, hist) = run?;
        histories.push(hist);
        if best.as_ref().map_or(true, |b| model.distortion < b.distortion) {
            best = Some(model);
        }
    }
    let best = best.expect("at least one restart");
    let obtuse = best.obtuse_points(x);
    if obtuse > 0 {
        log::warn!("{obtuse} points make an angle above 90 degrees with their central ray; consider more sectors");
    }
    Ok((best, histories))
}
