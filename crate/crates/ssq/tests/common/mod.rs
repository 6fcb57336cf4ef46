//! Shared test support: an independent linear-algebra oracle and dataset
//! generators.
//!
//! The oracle reaches column spans through Householder QR with column
//! pivoting — a different algorithm from the library's Gram-Schmidt kernel —
//! so span, rank, and projector comparisons actually cross-check the
//! implementation rather than replaying it.

#![allow(dead_code)]

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ssq::design::Dataset;

/// Householder QR with column pivoting; returns `(q_full, rank)` where
/// `q_full` is the complete n x n orthogonal factor. The first `rank`
/// columns span the input's column space, the rest its orthogonal
/// complement.
pub fn householder_full(m: ArrayView2<'_, f64>, tol: f64) -> (Array2<f64>, usize) {
    let (n, k) = m.dim();
    let mut a = m.to_owned();
    let max0 = (0..k)
        .map(|j| a.column(j).dot(&a.column(j)).sqrt())
        .fold(0.0f64, f64::max);
    let mut reflectors: Vec<(usize, Array1<f64>)> = Vec::new();
    let mut rank = 0;
    for step in 0..n.min(k) {
        // Pivot on the column with the largest remaining tail norm.
        let mut best = step;
        let mut best_norm = -1.0;
        for j in step..k {
            let tail = a.slice(s![step.., j]);
            let nrm = tail.dot(&tail).sqrt();
            if nrm > best_norm {
                best = j;
                best_norm = nrm;
            }
        }
        if best_norm <= tol * max0.max(f64::MIN_POSITIVE) {
            break;
        }
        if best != step {
            for r in 0..n {
                a.swap([r, step], [r, best]);
            }
        }
        let mut v: Array1<f64> = a.slice(s![step.., step]).to_owned();
        let alpha = if v[0] >= 0.0 { -best_norm } else { best_norm };
        v[0] -= alpha;
        let vn = v.dot(&v).sqrt();
        v.mapv_inplace(|t| t / vn);
        for j in step..k {
            let c = 2.0 * v.dot(&a.slice(s![step.., j]));
            let mut col = a.slice_mut(s![step.., j]);
            col.scaled_add(-c, &v);
        }
        reflectors.push((step, v));
        rank += 1;
    }
    // Accumulate Q = H_1 ... H_r applied to the identity.
    let mut q = Array2::eye(n);
    for (step, v) in reflectors.iter().rev() {
        for j in 0..n {
            let c = 2.0 * v.dot(&q.slice(s![*step.., j]));
            let mut col = q.slice_mut(s![*step.., j]);
            col.scaled_add(-c, v);
        }
    }
    (q, rank)
}

/// Orthonormal basis of the column span, by the oracle route.
pub fn oracle_basis(m: ArrayView2<'_, f64>, tol: f64) -> Array2<f64> {
    let (q, rank) = householder_full(m, tol);
    q.slice(s![.., ..rank]).to_owned()
}

/// Projector onto the column span, by the oracle route.
pub fn oracle_projector(m: ArrayView2<'_, f64>, tol: f64) -> Array2<f64> {
    let b = oracle_basis(m, tol);
    b.dot(&b.t())
}

pub fn oracle_rank(m: ArrayView2<'_, f64>, tol: f64) -> usize {
    householder_full(m, tol).1
}

pub fn max_abs(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Column-wise concatenation, tolerating an empty list (an `n x 0` result).
pub fn hstack(n: usize, parts: &[ArrayView2<'_, f64>]) -> Array2<f64> {
    if parts.is_empty() {
        return Array2::zeros((n, 0));
    }
    ndarray::concatenate(ndarray::Axis(1), parts).unwrap()
}

/// Relative gap between two scalars, floored so that comparing exact zeros
/// is well defined.
pub fn rel_gap(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1e-12)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, k), |_| rng.sample::<f64, _>(StandardNormal))
}

/// Random symmetric positive definite matrix, eigenvalues bounded away from
/// zero.
pub fn spd_matrix(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let g = gaussian_matrix(rng, n, n);
    let mut d = g.t().dot(&g);
    for i in 0..n {
        d[[i, i]] += 0.5;
    }
    d
}

/// Raw observation columns for a two-factor layout with the given per-cell
/// counts (row-major, `counts[i][j]`), standard normal response, levels
/// labeled `a1..`, `b1..`.
pub fn columns_from_counts(
    rng: &mut ChaCha8Rng,
    counts: &[Vec<usize>],
) -> (Vec<f64>, Vec<String>, Vec<String>) {
    let b = counts[0].len();
    let mut y = Vec::new();
    let mut col_a = Vec::new();
    let mut col_b = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        assert_eq!(row.len(), b, "ragged counts");
        for (j, &n_ij) in row.iter().enumerate() {
            for _ in 0..n_ij {
                y.push(rng.sample::<f64, _>(StandardNormal));
                col_a.push(format!("a{}", i + 1));
                col_b.push(format!("b{}", j + 1));
            }
        }
    }
    (y, col_a, col_b)
}

/// A two-factor dataset built from [`columns_from_counts`].
pub fn dataset_from_counts(rng: &mut ChaCha8Rng, counts: &[Vec<usize>]) -> Dataset {
    let (y, col_a, col_b) = columns_from_counts(rng, counts);
    Dataset::from_columns("y", y, vec![("A".into(), col_a), ("B".into(), col_b)]).unwrap()
}

/// Random all-cells-filled counts with `a, b` in the given inclusive ranges
/// and `n_ij` in `1..=max_n`.
pub fn random_filled_counts(
    rng: &mut ChaCha8Rng,
    levels: (usize, usize),
    max_n: usize,
) -> Vec<Vec<usize>> {
    let a = rng.gen_range(levels.0..=levels.1);
    let b = rng.gen_range(levels.0..=levels.1);
    (0..a)
        .map(|_| (0..b).map(|_| rng.gen_range(1..=max_n)).collect())
        .collect()
}

/// Random counts with exactly one empty cell, `a, b >= 3`.
pub fn random_one_empty_counts(
    rng: &mut ChaCha8Rng,
    levels: (usize, usize),
    max_n: usize,
) -> Vec<Vec<usize>> {
    let mut counts = random_filled_counts(
        rng,
        (levels.0.max(3), levels.1.max(3)),
        max_n,
    );
    let a = counts.len();
    let b = counts[0].len();
    let i = rng.gen_range(0..a);
    let j = rng.gen_range(0..b);
    counts[i][j] = 0;
    counts
}
