//! Convex analysis of mixtures: lateral-edge detection on sector central rays,
//! selection of the K edges that best fit the clustered data, and non-negative
//! source recovery.

use rayon::prelude::*;

use crate::clustering::SectorModel;
use crate::error::{CamError, Result};
use crate::geometry::{nnls_normal, PoolProjector};
use crate::linalg::{condition_number, pseudo_inverse_apply};
use crate::matrix::Matrix;
use crate::scalar::{dot, Scalar};

/// Default projection-angle threshold (radians) below which a ray counts as interior.
pub const DEFAULT_TAU: f64 = 1e-3;
/// Above this many K-subsets the edge search switches to branch and bound.
pub const DEFAULT_BB_THRESHOLD: u64 = 50_000;
/// Condition number above which source recovery warns.
pub const CONDITION_WARN: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet<T> {
    /// Columns of the ray matrix that survived, in scan order.
    pub ray_indices: Vec<usize>,
    pub tau: T,
}

impl<T> EdgeSet<T> {
    pub fn len(&self) -> usize {
        self.ray_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ray_indices.is_empty()
    }
}

/// Lateral edges of the cone spanned by the columns of `rays`, scanning columns in
/// ascending order. Directions are assumed distinct (see
/// [`dedup_directions`](crate::geometry::dedup_directions)).
pub fn detect_edges<T: Scalar>(rays: &Matrix<T>, tau: T) -> Result<EdgeSet<T>> {
    let order: Vec<usize> = (0..rays.cols()).collect();
    detect_edges_in_order(rays, &order, tau)
}

/// Edge detection over the candidate columns `order`, tested in that order. Each
/// candidate is projected onto the cone of the candidates still retained and
/// dropped when the projection angle is at most `tau`. Earlier survivors are not
/// re-tested.
pub fn detect_edges_in_order<T: Scalar>(rays: &Matrix<T>, order: &[usize], tau: T) -> Result<EdgeSet<T>> {
    if order.iter().any(|&j| j >= rays.cols()) {
        return Err(CamError::InvalidArgument("edge candidate index out of range".into()));
    }
    let projector = PoolProjector::new(rays);
    let mut current: Vec<usize> = order.to_vec();
    let mut pos = 0;
    let mut others: Vec<usize> = Vec::with_capacity(current.len());
    while pos < current.len() {
        let target = current[pos];
        others.clear();
        others.extend(current.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &j)| j));
        let theta = if others.is_empty() {
            T::pi()
        } else {
            projector.project_member(target, &others)?.angle
        };
        if theta > tau {
            pos += 1;
        } else {
            current.remove(pos);
        }
    }
    assert!(
        !current.is_empty() || order.is_empty(),
        "edge detection removed every ray; input directions were not distinct"
    );
    Ok(EdgeSet { ray_indices: current, tau })
}

/// Chooses between exhaustive and branch-and-bound search for the K-edge subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    Exhaustive,
    BranchAndBound,
    /// Branch and bound once `C(J*, K)` exceeds the threshold, exhaustive otherwise.
    Auto { threshold: u64 },
}

impl Default for SearchStrategy {
    fn default() -> Self {
        SearchStrategy::Auto { threshold: DEFAULT_BB_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingEstimate<T> {
    /// M×K estimate; columns are the selected central rays, scaled to unit element
    /// sum when every column sum is positive and left unit-norm otherwise.
    pub a_hat: Matrix<T>,
    /// Ray indices of the selected edges, ascending.
    pub selected_edges: Vec<usize>,
    pub fit_error: T,
}

/// Sector-size-weighted model fitting error of a candidate edge subset: the sum over
/// all sectors of `N_j · ∠(r_j, projection of r_j onto the subset's cone)`.
pub fn fit_error<T: Scalar>(rays: &Matrix<T>, sizes: &[usize], subset: &[usize]) -> Result<T> {
    FitObjective::new(rays, sizes)?.error(subset)
}

struct FitObjective<'a, T> {
    projector: PoolProjector<'a, T>,
    sizes: &'a [usize],
}

impl<'a, T: Scalar> FitObjective<'a, T> {
    fn new(rays: &'a Matrix<T>, sizes: &'a [usize]) -> Result<Self> {
        if sizes.len() != rays.cols() {
            return Err(CamError::DimensionMismatch(format!(
                "{} sector sizes for {} rays",
                sizes.len(),
                rays.cols()
            )));
        }
        Ok(FitObjective { projector: PoolProjector::new(rays), sizes })
    }

    fn error(&self, subset: &[usize]) -> Result<T> {
        let mut total = T::zero();
        for (j, &nj) in self.sizes.iter().enumerate() {
            if nj == 0 || subset.contains(&j) {
                continue;
            }
            let theta = self.projector.member_angle(j, subset)?;
            total = total + T::of(nj as f64) * theta;
        }
        Ok(total)
    }

    /// Numerical slack used when pruning, so that rounding in the projections can
    /// never discard a subset that exhaustive search would pick.
    fn slack(&self, best: T) -> T {
        let n_total: usize = self.sizes.iter().sum();
        T::rel_tol(1e-9) * best.abs() + T::rel_tol(1e-10) * T::of(n_total as f64)
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn better<T: Scalar>(err: T, subset: &[usize], best: &Option<(T, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((b, tuple)) => err < *b || (err == *b && subset < tuple.as_slice()),
    }
}

fn search_exhaustive<T: Scalar>(obj: &FitObjective<T>, pool: &[usize], k: usize) -> Result<(Vec<usize>, T)> {
    let n = pool.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut subset = vec![0usize; k];
    loop {
        for (s, &i) in subset.iter_mut().zip(&idx) {
            *s = pool[i];
        }
        let err = obj.error(&subset)?;
        if better(err, &subset, &best) {
            best = Some((err, subset.clone()));
        }
        // Next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                let (err, tuple) = best.expect("at least one subset");
                return Ok((tuple, err));
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct BranchAndBound<'a, 'b, T> {
    obj: &'b FitObjective<'a, T>,
    pool: &'b [usize],
    k: usize,
    best: Option<(T, Vec<usize>)>,
}

impl<T: Scalar> BranchAndBound<'_, '_, T> {
    /// `set` holds pool positions still included; positions `>= start` have not been
    /// removed yet. Removing elements never lowers the fitting error, so a node whose
    /// error already exceeds the incumbent bounds its whole subtree.
    fn visit(&mut self, set: &mut Vec<usize>, start: usize, err: T) -> Result<()> {
        if set.len() == self.k {
            let tuple: Vec<usize> = set.iter().map(|&p| self.pool[p]).collect();
            if better(err, &tuple, &self.best) {
                self.best = Some((err, tuple));
            }
            return Ok(());
        }
        let n = self.pool.len();
        let still_to_remove = set.len() - self.k;
        // Position p may be removed if enough later positions remain for the rest.
        let last = n - still_to_remove;
        for p in start..=last {
            let at = set.iter().position(|&q| q == p).expect("positions >= start are present");
            set.remove(at);
            let members: Vec<usize> = set.iter().map(|&q| self.pool[q]).collect();
            let child_err = self.obj.error(&members)?;
            let bound = self.best.as_ref().map(|(b, _)| *b + self.obj.slack(*b));
            if bound.map_or(true, |b| child_err <= b) {
                self.visit(set, p + 1, child_err)?;
            }
            set.insert(at, p);
        }
        Ok(())
    }
}

fn greedy_backward<T: Scalar>(obj: &FitObjective<T>, pool: &[usize], k: usize) -> Result<(Vec<usize>, T)> {
    let mut current: Vec<usize> = pool.to_vec();
    let mut err = obj.error(&current)?;
    while current.len() > k {
        let mut choice: Option<(T, usize)> = None;
        for drop in 0..current.len() {
            let trial: Vec<usize> =
                current.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &j)| j).collect();
            let e = obj.error(&trial)?;
            if choice.map_or(true, |(b, _)| e < b) {
                choice = Some((e, drop));
            }
        }
        let (e, drop) = choice.expect("non-empty set");
        current.remove(drop);
        err = e;
    }
    Ok((current, err))
}

fn search_branch_and_bound<T: Scalar>(obj: &FitObjective<T>, pool: &[usize], k: usize) -> Result<(Vec<usize>, T)> {
    let initial = greedy_backward(obj, pool, k)?;
    let mut bb = BranchAndBound { obj, pool, k, best: Some((initial.1, initial.0)) };
    let mut set: Vec<usize> = (0..pool.len()).collect();
    let root_err = obj.error(pool)?;
    bb.visit(&mut set, 0, root_err)?;
    let (err, tuple) = bb.best.expect("search visits at least the incumbent");
    Ok((tuple, err))
}

/// Size-K subset of `pool` (ray indices) minimizing the fitting error; ties go to the
/// lexicographically smallest ascending index tuple. Returns the subset and its error.
pub fn select_from_pool<T: Scalar>(
    rays: &Matrix<T>,
    sizes: &[usize],
    pool: &[usize],
    k: usize,
    strategy: SearchStrategy,
) -> Result<(Vec<usize>, T)> {
    if k == 0 {
        return Err(CamError::InvalidArgument("source count must be positive".into()));
    }
    if k > pool.len() {
        return Err(CamError::InsufficientEdges { found: pool.len(), k });
    }
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let obj = FitObjective::new(rays, sizes)?;
    if k == pool.len() {
        let err = obj.error(&pool)?;
        return Ok((pool, err));
    }
    let use_bb = match strategy {
        SearchStrategy::Exhaustive => false,
        SearchStrategy::BranchAndBound => true,
        SearchStrategy::Auto { threshold } => binomial(pool.len(), k) > threshold,
    };
    if use_bb {
        search_branch_and_bound(&obj, &pool, k)
    } else {
        search_exhaustive(&obj, &pool, k)
    }
}

/// Rays as mixing-matrix columns: unit element sum when all column sums are
/// positive, unchanged otherwise.
pub fn mixing_from_rays<T: Scalar>(rays: &Matrix<T>, selected: &[usize]) -> Matrix<T> {
    let mut a = rays.select_columns(selected);
    let sums: Vec<T> = a.columns().map(|c| c.iter().copied().sum()).collect();
    if sums.iter().all(|&s| s > T::zero()) {
        for (j, &s) in sums.iter().enumerate() {
            a.col_mut(j).iter_mut().for_each(|v| *v = *v / s);
        }
    }
    a
}

pub fn select_k_edges<T: Scalar>(
    model: &SectorModel<T>,
    edges: &EdgeSet<T>,
    k: usize,
    strategy: SearchStrategy,
) -> Result<MixingEstimate<T>> {
    let (selected_edges, fit_error) =
        select_from_pool(&model.rays, &model.sector_sizes, &edges.ray_indices, k, strategy)?;
    Ok(MixingEstimate { a_hat: mixing_from_rays(&model.rays, &selected_edges), selected_edges, fit_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceEstimate<T> {
    /// K×N non-negative source estimate.
    pub s_hat: Matrix<T>,
    /// Cone projection of every data column, `Â·Ŝ`.
    pub projected_x: Matrix<T>,
}

/// Checks that `a` has full column rank and returns its condition number.
pub fn check_full_column_rank<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    let (m, k) = a.shape();
    if k > m {
        return Err(CamError::RankDeficient { k, m });
    }
    let cond = condition_number(a);
    let limit = T::one() / (T::epsilon() * T::of(1e3));
    if !cond.is_finite() || cond > limit {
        return Err(CamError::RankDeficient { k, m });
    }
    if cond > T::of(CONDITION_WARN) {
        log::warn!("mixing estimate is ill-conditioned (condition number {cond})");
    }
    Ok(cond)
}

/// Non-negative least-squares sources: each column of `Ŝ` is the coefficient vector
/// of the projection of the matching data column onto the cone of `Â`.
pub fn recover_sources<T: Scalar>(x: &Matrix<T>, a_hat: &Matrix<T>) -> Result<SourceEstimate<T>> {
    if x.rows() != a_hat.rows() {
        return Err(CamError::DimensionMismatch(format!(
            "{}-row data against {}-row mixing matrix",
            x.rows(),
            a_hat.rows()
        )));
    }
    check_full_column_rank(a_hat)?;
    let k = a_hat.cols();
    let gram = a_hat.gram();
    let columns: Vec<Result<Vec<T>>> = (0..x.cols())
        .into_par_iter()
        .map(|n| {
            let xn = x.col(n);
            let h: Vec<T> = a_hat.columns().map(|c| dot(c, xn)).collect();
            nnls_normal(k, |i, j| gram[(i, j)], &h)
        })
        .collect();
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    let s_hat = Matrix::from_columns(k, &columns)?;
    let projected_x = a_hat.matmul(&s_hat)?;
    Ok(SourceEstimate { s_hat, projected_x })
}

/// A vector `γ` with `γᵀa_k > 0` for every column: the all-ones vector when it
/// qualifies, otherwise `Â(ÂᵀÂ)⁻¹1`, which gives `γᵀa_k = 1`.
pub fn gamma_vector<T: Scalar>(a: &Matrix<T>) -> Result<Vec<T>> {
    let ones = vec![T::one(); a.rows()];
    if a.columns().all(|c| dot(&ones, c) > T::zero()) {
        return Ok(ones);
    }
    // (ÂᵀÂ)⁻¹1 is the least-squares solution of Âᵀ y = 1 mapped through Â.
    let gram = a.gram();
    let l = crate::linalg::cholesky(&gram.to_row_major(), a.cols(), T::epsilon())
        .ok_or(CamError::RankDeficient { k: a.cols(), m: a.rows() })?;
    let w = crate::linalg::cholesky_solve(&l, a.cols(), &vec![T::one(); a.cols()]);
    Ok(a.mul_vec(&w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaNormalized<T> {
    pub gamma: Vec<T>,
    /// Columns `x_n / γᵀx_n` for the points with `γᵀx_n > 0`.
    pub x_tilde: Matrix<T>,
    pub kept: Vec<usize>,
    /// `γᵀx_n` of the kept points.
    pub scales: Vec<T>,
}

pub fn gamma_normalize<T: Scalar>(x: &Matrix<T>, a_hat: &Matrix<T>) -> Result<GammaNormalized<T>> {
    if x.rows() != a_hat.rows() {
        return Err(CamError::DimensionMismatch("gamma normalization".into()));
    }
    let gamma = gamma_vector(a_hat)?;
    let mut kept = Vec::new();
    let mut scales = Vec::new();
    let mut cols = Vec::new();
    for (n, c) in x.columns().enumerate() {
        let g = dot(&gamma, c);
        if g > T::zero() {
            kept.push(n);
            scales.push(g);
            cols.push(c.iter().map(|&v| v / g).collect::<Vec<T>>());
        }
    }
    let dropped = x.cols() - kept.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} points with non-positive inner product against gamma");
    }
    Ok(GammaNormalized { gamma, x_tilde: Matrix::from_columns(x.rows(), &cols)?, kept, scales })
}

/// Normalized source abundances `s̃_{k,n} = γᵀa_k s_{k,n} / Σ_i γᵀa_i s_{i,n}`; each
/// non-zero column sums to one.
pub fn normalized_sources<T: Scalar>(a: &Matrix<T>, s: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols() != s.rows() {
        return Err(CamError::DimensionMismatch("normalized sources".into()));
    }
    let gamma = gamma_vector(a)?;
    let weights: Vec<T> = a.columns().map(|c| dot(&gamma, c)).collect();
    let mut out = Matrix::zeros(s.rows(), s.cols());
    for n in 0..s.cols() {
        let col = s.col(n);
        let w: Vec<T> = col.iter().zip(&weights).map(|(&v, &g)| g * v).collect();
        let total: T = w.iter().copied().sum();
        if total > T::zero() {
            out.col_mut(n).iter_mut().zip(&w).for_each(|(o, &v)| *o = v / total);
        }
    }
    Ok(out)
}

/// For each source (row), the index of the point with the largest normalized
/// abundance; ties go to the lowest index.
pub fn max_dominance_indices<T: Scalar>(s_tilde: &Matrix<T>) -> Vec<usize> {
    (0..s_tilde.rows())
        .map(|k| {
            let mut best = 0;
            for n in 1..s_tilde.cols() {
                if s_tilde[(k, n)] > s_tilde[(k, best)] {
                    best = n;
                }
            }
            best
        })
        .collect()
}

/// For each source, the `per_source` points maximizing `s_{k,n} / Σ_i s_{i,n}`,
/// in descending ratio order with ties to the lowest index.
pub fn select_marker_points<T: Scalar>(s: &Matrix<T>, per_source: usize) -> Result<Vec<Vec<usize>>> {
    if per_source == 0 {
        return Err(CamError::InvalidArgument("marker count must be positive".into()));
    }
    let n = s.cols();
    let take = if per_source > n {
        log::warn!("requested {per_source} markers per source but only {n} points exist");
        n
    } else {
        per_source
    };
    let totals: Vec<T> = s.columns().map(|c| c.iter().copied().sum()).collect();
    Ok((0..s.rows())
        .map(|k| {
            let ratio = |p: usize| if totals[p] > T::zero() { s[(k, p)] / totals[p] } else { T::zero() };
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                ratio(b).partial_cmp(&ratio(a)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            });
            idx.truncate(take);
            idx
        })
        .collect())
}

/// Two-route check helper: `(ÂᵀÂ)⁻¹Âᵀ y`.
pub fn generalized_inverse_apply<T: Scalar>(a_hat: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    pseudo_inverse_apply(a_hat, y)
}
