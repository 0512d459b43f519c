//! Synthetic data: the correlated toy dataset, constrained random mixing matrices,
//! Gaussian noise and SNR bookkeeping.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{CamError, Result};
use crate::geometry::{project_onto_cone, ConeBasis};
use crate::linalg::{condition_number, symmetric_eigen};
use crate::matrix::Matrix;
use crate::rng::{child_rng, derive_seed};

/// Default number of candidate draws before random mixing generation gives up.
pub const DEFAULT_REJECTION_BUDGET: usize = 10_000;
/// Largest condition number accepted for exact- and over-determined mixing.
pub const MAX_CONDITION: f64 = 4.0;
/// Smallest angle between a column and the cone of the others for under-determined mixing.
pub const MIN_EDGE_ANGLE: f64 = std::f64::consts::PI / 7.0;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// M×M noise covariance.
    pub covariance: Matrix<f64>,
}

impl NoiseSpec {
    pub fn isotropic(m: usize, variance: f64) -> Self {
        let mut c = Matrix::identity(m);
        for i in 0..m {
            c[(i, i)] = variance;
        }
        NoiseSpec { covariance: c }
    }

    pub fn zero(m: usize) -> Self {
        NoiseSpec { covariance: Matrix::zeros(m, m) }
    }

    pub fn dim(&self) -> usize {
        self.covariance.rows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.covariance[(i, i)]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.covariance.as_col_major().iter().all(|&v| v == 0.0)
    }

    /// `L` with `L Lᵀ = Σ`, from the eigendecomposition so that singular
    /// covariances are accepted.
    pub fn factor(&self) -> Result<Matrix<f64>> {
        covariance_factor(&self.covariance)
    }
}

fn covariance_factor(c: &Matrix<f64>) -> Result<Matrix<f64>> {
    let (m, n) = c.shape();
    if m != n {
        return Err(CamError::DimensionMismatch(format!("covariance is {m}×{n}")));
    }
    for i in 0..m {
        for j in 0..i {
            if (c[(i, j)] - c[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(CamError::InvalidArgument("covariance is not symmetric".into()));
            }
        }
    }
    let (values, vectors) = symmetric_eigen(c)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(CamError::NotPsd(min));
    }
    let mut l = vectors;
    for (j, &lambda) in values.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        l.col_mut(j).iter_mut().for_each(|v| *v *= s);
    }
    Ok(l)
}

/// Dataset SNR in dB: total clean signal energy over `N · trace(Σ_noise)`.
pub fn snr_db(x_clean: &Matrix<f64>, noise: &NoiseSpec) -> Result<f64> {
    if noise.dim() != x_clean.rows() {
        return Err(CamError::DimensionMismatch("noise covariance against data rows".into()));
    }
    let trace = noise.trace();
    if !(trace > 0.0) {
        return Err(CamError::InfiniteSnr);
    }
    let energy: f64 = x_clean.as_col_major().iter().map(|v| v * v).sum();
    Ok(10.0 * (energy / (x_clean.cols() as f64 * trace)).log10())
}

/// Isotropic noise `σ²I` giving `x_clean` the requested SNR.
pub fn calibrate_noise_for_snr(x_clean: &Matrix<f64>, target_db: f64) -> Result<NoiseSpec> {
    if !target_db.is_finite() {
        return Err(CamError::InvalidArgument(format!("target SNR {target_db} is not finite")));
    }
    let (m, n) = x_clean.shape();
    let energy: f64 = x_clean.as_col_major().iter().map(|v| v * v).sum();
    if !(energy > 0.0) || n == 0 {
        return Err(CamError::InvalidArgument("clean data has no energy to calibrate against".into()));
    }
    let variance = energy / (n as f64 * m as f64 * 10f64.powf(target_db / 10.0));
    Ok(NoiseSpec::isotropic(m, variance))
}

/// M×N matrix whose columns are independent draws from `N(0, Σ_noise)`.
pub fn noise_sample(noise: &NoiseSpec, n: usize, seed: u64) -> Result<Matrix<f64>> {
    let m = noise.dim();
    let l = noise.factor()?;
    let mut rng = child_rng(seed, "noise", &[]);
    let mut out = Matrix::zeros(m, n);
    let mut z = vec![0.0; m];
    for j in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        out.col_mut(j).copy_from_slice(&l.mul_vec(&z));
    }
    Ok(out)
}

/// `X = A S + E` with `E` drawn from `noise`.
pub fn mix(s: &Matrix<f64>, a: &Matrix<f64>, noise: &NoiseSpec, seed: u64) -> Result<Matrix<f64>> {
    if noise.dim() != a.rows() {
        return Err(CamError::DimensionMismatch("noise covariance against mixing rows".into()));
    }
    let clean = a.matmul(s)?;
    if noise.is_zero() {
        return Ok(clean);
    }
    clean.add(&noise_sample(noise, s.cols(), seed)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub n_points: usize,
    pub mixing: Matrix<f64>,
    /// Means of the independent exponential sources.
    pub mu_exp: Vec<f64>,
    pub mu_gauss: Vec<f64>,
    pub sigma_gauss: Matrix<f64>,
    pub noise: NoiseSpec,
}

impl Default for ToySpec {
    fn default() -> Self {
        ToySpec {
            n_points: 1600,
            mixing: Matrix::from_rows(&[vec![-0.1, 0.5, 0.6], vec![0.6, -0.1, 0.5], vec![0.5, 0.6, -0.1]])
                .expect("static shape"),
            mu_exp: vec![1.0; 3],
            mu_gauss: vec![0.0; 3],
            sigma_gauss: correlated_covariance(3, 0.9),
            noise: NoiseSpec::isotropic(3, 0.07),
        }
    }
}

/// Unit-variance covariance with every off-diagonal entry equal to `rho`.
pub fn correlated_covariance(k: usize, rho: f64) -> Matrix<f64> {
    let mut c = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            c[(i, j)] = if i == j { 1.0 } else { rho };
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix<f64>,
    pub a: Matrix<f64>,
    pub s: Matrix<f64>,
}

/// K×N columns drawn from `N(mu, sigma)`.
pub fn gaussian_columns(mu: &[f64], sigma: &Matrix<f64>, n: usize, seed: u64) -> Result<Matrix<f64>> {
    let k = mu.len();
    if sigma.shape() != (k, k) {
        return Err(CamError::DimensionMismatch("Gaussian mean against covariance".into()));
    }
    let l = covariance_factor(sigma)?;
    let mut rng = child_rng(seed, "gaussian", &[]);
    let mut out = Matrix::zeros(k, n);
    let mut z = vec![0.0; k];
    for j in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let g = l.mul_vec(&z);
        for (o, (gi, mi)) in out.col_mut(j).iter_mut().zip(g.iter().zip(mu)) {
            *o = gi + mi;
        }
    }
    Ok(out)
}

/// Sources with the first `n_exp` columns independent exponentials (by mean) and
/// the rest entrywise absolute values of [`gaussian_columns`] drawn with the seed
/// derived from `(seed, "sources-gauss")`.
pub fn exp_gauss_sources(
    n_exp: usize,
    n_gauss: usize,
    mu_exp: &[f64],
    mu_gauss: &[f64],
    sigma_gauss: &Matrix<f64>,
    seed: u64,
) -> Result<Matrix<f64>> {
    let k = mu_exp.len();
    if mu_gauss.len() != k || sigma_gauss.shape() != (k, k) {
        return Err(CamError::DimensionMismatch("source parameters disagree on K".into()));
    }
    let exps = mu_exp
        .iter()
        .map(|&m| {
            if m > 0.0 {
                Exp::new(1.0 / m).map_err(|e| CamError::InvalidArgument(e.to_string()))
            } else {
                Err(CamError::InvalidArgument(format!("exponential mean {m} must be positive")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = child_rng(seed, "sources-exp", &[]);
    let mut s = Matrix::zeros(k, n_exp + n_gauss);
    for j in 0..n_exp {
        for (i, e) in exps.iter().enumerate() {
            s[(i, j)] = e.sample(&mut rng);
        }
    }
    let g = gaussian_columns(mu_gauss, sigma_gauss, n_gauss, derive_seed(seed, "sources-gauss", &[]))?;
    for j in 0..n_gauss {
        for i in 0..k {
            s[(i, n_exp + j)] = g[(i, j)].abs();
        }
    }
    Ok(s)
}

/// The toy dataset: exponential and folded-Gaussian halves mixed by `spec.mixing`
/// plus Gaussian noise.
pub fn gen_toy(spec: &ToySpec, seed: u64) -> Result<Dataset> {
    if spec.n_points % 2 != 0 {
        return Err(CamError::InvalidArgument(format!("toy point count {} must be even", spec.n_points)));
    }
    if spec.mixing.cols() != spec.mu_exp.len() {
        return Err(CamError::DimensionMismatch("mixing columns against source count".into()));
    }
    let half = spec.n_points / 2;
    let s = exp_gauss_sources(half, half, &spec.mu_exp, &spec.mu_gauss, &spec.sigma_gauss, seed)?;
    let x = mix(&s, &spec.mixing, &spec.noise, seed)?;
    Ok(Dataset { x, a: spec.mixing.clone(), s })
}

/// Benchmark sources for K-source experiments: half exponential with unit means,
/// half folded Gaussians with pairwise correlation 0.9.
pub fn gen_benchmark_sources(k: usize, n: usize, seed: u64) -> Result<Matrix<f64>> {
    let n_exp = n.div_ceil(2);
    exp_gauss_sources(n_exp, n - n_exp, &vec![1.0; k], &vec![0.0; k], &correlated_covariance(k, 0.9), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Exact,
    Over,
    Under,
}

impl Scenario {
    pub fn of_shape(m: usize, k: usize) -> Scenario {
        match m.cmp(&k) {
            std::cmp::Ordering::Equal => Scenario::Exact,
            std::cmp::Ordering::Greater => Scenario::Over,
            std::cmp::Ordering::Less => Scenario::Under,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = CamError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Scenario::Exact),
            "over" => Ok(Scenario::Over),
            "under" => Ok(Scenario::Under),
            other => Err(CamError::InvalidArgument(format!("unknown scenario {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Exact => "exact",
            Scenario::Over => "over",
            Scenario::Under => "under",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingOptions {
    /// Draw entries from uniform(−0.5, 1) instead of uniform(0, 1). Exact and
    /// over-determined scenarios only.
    pub mixed_sign: bool,
    pub budget: usize,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions { mixed_sign: false, budget: DEFAULT_REJECTION_BUDGET }
    }
}

/// Smallest angle between a column of `a` and the cone of its other columns.
pub fn min_edge_angle(a: &Matrix<f64>) -> Result<f64> {
    let k = a.cols();
    let mut min = f64::INFINITY;
    for j in 0..k {
        let others: Vec<usize> = (0..k).filter(|&i| i != j).collect();
        if others.is_empty() {
            return Ok(std::f64::consts::PI);
        }
        let basis = ConeBasis::new(a.select_columns(&others))?;
        min = min.min(project_onto_cone(a.col(j), &basis)?.angle);
    }
    Ok(min)
}

/// Whether `a` meets the scenario's acceptance constraint.
pub fn satisfies_scenario(a: &Matrix<f64>, scenario: Scenario) -> Result<bool> {
    Ok(match scenario {
        Scenario::Exact | Scenario::Over => condition_number(a) <= MAX_CONDITION,
        Scenario::Under => min_edge_angle(a)? >= MIN_EDGE_ANGLE,
    })
}

pub fn gen_random_mixing(m: usize, k: usize, scenario: Scenario, seed: u64) -> Result<Matrix<f64>> {
    gen_random_mixing_with(m, k, scenario, seed, MixingOptions::default())
}

/// Rejection-samples an M×K matrix with unit row sums meeting the scenario
/// constraint: condition number at most 4 for exact/over, every column at least
/// π/7 away from the cone of the others for under.
pub fn gen_random_mixing_with(
    m: usize,
    k: usize,
    scenario: Scenario,
    seed: u64,
    options: MixingOptions,
) -> Result<Matrix<f64>> {
    if k == 0 || m == 0 {
        return Err(CamError::InvalidArgument("mixing dimensions must be positive".into()));
    }
    if Scenario::of_shape(m, k) != scenario {
        return Err(CamError::InvalidArgument(format!("{m}×{k} is not a {scenario} scenario")));
    }
    if scenario == Scenario::Under && m < 3 {
        return Err(CamError::InvalidArgument("under-determined mixing needs at least 3 mixtures".into()));
    }
    if scenario == Scenario::Under && options.mixed_sign {
        return Err(CamError::InvalidArgument("mixed-sign entries are only supported for exact/over".into()));
    }
    let (lo, hi) = if options.mixed_sign { (-0.5, 1.0) } else { (0.0, 1.0) };
    let mut rng = child_rng(seed, "random-mixing", &[]);
    'draw: for _ in 0..options.budget {
        let mut a = Matrix::zeros(m, k);
        for i in 0..m {
            let row: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
            let sum: f64 = row.iter().sum();
            if sum <= 1e-3 {
                continue 'draw;
            }
            for (j, v) in row.iter().enumerate() {
                a[(i, j)] = v / sum;
            }
        }
        if satisfies_scenario(&a, scenario)? {
            return Ok(a);
        }
    }
    Err(CamError::RejectionExhausted(options.budget))
}

/// The exact-determined mixing matrix of the image experiment.
pub fn image_mixing_exact() -> Matrix<f64> {
    Matrix::from_rows(&[
        vec![0.7021, 0.1506, 0.1473],
        vec![0.5668, 0.3442, 0.0890],
        vec![0.5535, 0.1016, 0.3449],
    ])
    .expect("static shape")
}

/// The over-determined mixing matrix of the image experiment; one entry is negative.
pub fn image_mixing_over() -> Matrix<f64> {
    Matrix::from_rows(&[
        vec![0.4082, 0.3274, 0.2644],
        vec![0.1562, 0.3085, 0.5353],
        vec![0.3923, 0.0119, 0.5958],
        vec![0.2376, 0.4015, 0.3609],
        vec![-0.5894, 0.2941, 0.1165],
    ])
    .expect("static shape")
}
