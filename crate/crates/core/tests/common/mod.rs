//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use cam::Matrix64;
use nalgebra::{DMatrix, DVector};

pub fn to_na(m: &Matrix64) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_col_major())
}

/// NNLS by enumerating every support set: least squares on each subset, keep the
/// feasible one with the smallest residual.
pub fn nnls_enumerate(b: &Matrix64, v: &[f64]) -> Vec<f64> {
    let q = b.cols();
    let target = DVector::from_column_slice(v);
    let full = to_na(b);
    let mut best: (f64, Vec<f64>) = (target.norm_squared(), vec![0.0; q]);
    for mask in 1u32..(1 << q) {
        let cols: Vec<usize> = (0..q).filter(|&i| mask & (1 << i) != 0).collect();
        let sub = full.select_columns(&cols);
        let svd = sub.clone().svd(true, true);
        let Ok(c) = svd.solve(&target, 1e-13) else { continue };
        if c.iter().any(|&x| x < 0.0) {
            continue;
        }
        let r = (&sub * &c - &target).norm_squared();
        if r < best.0 - 1e-15 {
            let mut coef = vec![0.0; q];
            for (k, &i) in cols.iter().enumerate() {
                coef[i] = c[k];
            }
            best = (r, coef);
        }
    }
    best.1
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

pub fn arccos_angle(u: &[f64], v: &[f64]) -> f64 {
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (d / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// Brute-force minimum average angle over all column permutations, summing in
/// row order.
pub fn min_avg_angle_brute(u: &Matrix64, w: &Matrix64) -> (f64, Vec<usize>) {
    let k = u.cols();
    let cost: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| cam::angle(u.col(i), w.col(j)).unwrap()).collect()).collect();
    let mut best = (f64::INFINITY, Vec::new());
    for p in permutations(k) {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        if total < best.0 {
            best = (total, p);
        }
    }
    (best.0 / k as f64, best.1)
}

/// Principal eigenvector of `Σ x xᵀ` by a dense symmetric eigensolver.
pub fn principal_direction(points: &[Vec<f64>]) -> Vec<f64> {
    let m = points[0].len();
    let mut r = DMatrix::<f64>::zeros(m, m);
    for p in points {
        let v = DVector::from_column_slice(p);
        r += &v * v.transpose();
    }
    let eig = r.symmetric_eigen();
    let (imax, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &l)| {
        if l > acc.1 { (i, l) } else { acc }
    });
    eig.eigenvectors.column(imax).iter().copied().collect()
}

pub fn condition_number_na(a: &Matrix64) -> f64 {
    let sv = to_na(a).singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Dedup oracle: union-find over pairs closer than `tol` radians, one representative per
/// component (largest norm, lowest index on ties).
pub fn dedup_union_find(points: &Matrix64, tol: f64) -> Vec<usize> {
    let n = points.cols();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let norms = points.col_norms();
    let live: Vec<usize> = (0..n).collect();
    for (a, &i) in live.iter().enumerate() {
        for &j in &live[a + 1..] {
            if cam::angle(points.col(i), points.col(j)).unwrap() < tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut reps: Vec<usize> = Vec::new();
    let mut roots: Vec<(usize, usize)> = Vec::new();
    for &i in &live {
        let r = find(&mut parent, i);
        match roots.iter_mut().find(|(root, _)| *root == r) {
            Some((_, best)) => {
                if norms[i] > norms[*best] {
                    *best = i;
                }
            }
            None => roots.push((r, i)),
        }
    }
    reps.extend(roots.into_iter().map(|(_, b)| b));
    reps.sort_unstable();
    reps
}

pub fn random_matrix(rng: &mut impl rand::Rng, m: usize, n: usize, lo: f64, hi: f64) -> Matrix64 {
    let data: Vec<f64> = (0..m * n).map(|_| rng.random_range(lo..hi)).collect();
    Matrix64::from_col_major(m, n, data).unwrap()
}

pub fn random_unit_rays(rng: &mut impl rand::Rng, m: usize, n: usize) -> Matrix64 {
    random_matrix(rng, m, n, 0.05, 1.0).normalize_columns()
}
