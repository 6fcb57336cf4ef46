//! Orthogonalization and projection matrices.
//!
//! The kernel is modified Gram-Schmidt over an ordered list of column
//! blocks, with one unconditional re-orthogonalization pass per column
//! ("twice is enough") and a relative tolerance for rank decisions: a column
//! is dropped when its residual norm falls below `tol` times its original
//! norm. Each accepted column remembers which input block contributed it, so
//! callers can read off bases of span differences without forming explicit
//! complements.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Relative residual-norm threshold below which a column is treated as
/// linearly dependent on its predecessors.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An orthonormal basis with provenance: which input block each accepted
/// column came from, and which input columns were dropped as dependent.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    q: Array2<f64>,
    source: Vec<usize>,
    drop_log: Vec<(usize, usize)>,
}

impl OrthoBasis {
    /// The orthonormal columns, in acceptance order.
    pub fn q(&self) -> ArrayView2<'_, f64> {
        self.q.view()
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.q.nrows()
    }

    /// Block index that contributed each accepted column.
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    /// `(block, column-within-block)` of every dropped input column.
    pub fn drop_log(&self) -> &[(usize, usize)] {
        &self.drop_log
    }

    /// Number of accepted columns contributed by `block`.
    pub fn count_from(&self, block: usize) -> usize {
        self.source.iter().filter(|&&b| b == block).count()
    }

    /// The accepted columns contributed by `block`, as an owned matrix.
    pub fn columns_from(&self, block: usize) -> Array2<f64> {
        let idx: Vec<usize> = self
            .source
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == block)
            .map(|(i, _)| i)
            .collect();
        let mut out = Array2::zeros((self.q.nrows(), idx.len()));
        for (j, &i) in idx.iter().enumerate() {
            out.column_mut(j).assign(&self.q.column(i));
        }
        out
    }
}

/// Orthogonalizes the concatenation of `blocks` left to right.
///
/// Block order matters: a column dependent on anything accepted before it is
/// dropped, so later blocks only contribute directions outside the span of
/// earlier ones.
pub fn gram_schmidt(blocks: &[ArrayView2<'_, f64>], tol: f64) -> Result<OrthoBasis> {
    let n = match blocks.first() {
        Some(b) => b.nrows(),
        None => return Err(Error::EmptyInput),
    };
    for b in blocks {
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: b.nrows(),
            });
        }
    }

    let mut accepted: Vec<Array1<f64>> = Vec::new();
    let mut source = Vec::new();
    let mut drop_log = Vec::new();
    for (bi, block) in blocks.iter().enumerate() {
        for (j, col) in block.axis_iter(Axis(1)).enumerate() {
            let mut v = col.to_owned();
            let norm0 = norm(&v.view());
            if norm0 == 0.0 {
                drop_log.push((bi, j));
                continue;
            }
            for _ in 0..2 {
                for q in &accepted {
                    let c = q.dot(&v);
                    v.scaled_add(-c, q);
                }
            }
            let resid = norm(&v.view());
            if resid > tol * norm0 {
                accepted.push(&v / resid);
                source.push(bi);
            } else {
                drop_log.push((bi, j));
            }
        }
    }

    let mut q = Array2::zeros((n, accepted.len()));
    for (i, col) in accepted.iter().enumerate() {
        q.column_mut(i).assign(col);
    }
    Ok(OrthoBasis { q, source, drop_log })
}

fn norm(v: &ArrayView1<'_, f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Orthonormal basis of the directions `x` adds beyond `sp(a)`, i.e. of
/// `sp(a, x)` minus `sp(a)`.
pub fn complement_within<'a>(
    a: ArrayView2<'a, f64>,
    x: ArrayView2<'a, f64>,
    tol: f64,
) -> Result<Array2<f64>> {
    let basis = gram_schmidt(&[a, x], tol)?;
    Ok(basis.columns_from(1))
}

/// A symmetric idempotent matrix.
#[derive(Debug, Clone)]
pub struct Projector {
    m: Array2<f64>,
}

impl Projector {
    /// Projector onto the span of an orthonormal basis: `Q Qᵀ`.
    pub fn from_basis(basis: &OrthoBasis) -> Self {
        Projector {
            m: basis.q.dot(&basis.q.t()),
        }
    }

    /// Projector onto the column span of an arbitrary matrix.
    pub fn from_columns(cols: ArrayView2<'_, f64>, tol: f64) -> Result<Self> {
        Ok(Self::from_basis(&gram_schmidt(&[cols], tol)?))
    }

    /// Wraps a matrix the caller already knows to be a projector.
    pub fn from_matrix(m: Array2<f64>) -> Self {
        Projector { m }
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.m.view()
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.m.diag().sum()
    }

    /// Degrees of freedom: the trace, which is an integer up to roundoff for
    /// a genuine projector.
    pub fn df(&self) -> usize {
        self.trace().round().max(0.0) as usize
    }

    /// `I - P`.
    pub fn complement(&self) -> Projector {
        let mut m = -self.m.clone();
        for i in 0..m.nrows() {
            m[[i, i]] += 1.0;
        }
        Projector { m }
    }

    pub fn apply(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        self.m.dot(&v)
    }

    /// `yᵀ P y`.
    pub fn quad_form(&self, y: ArrayView1<'_, f64>) -> f64 {
        self.m.dot(&y).dot(&y)
    }
}

/// Largest absolute entrywise difference between two matrices.
pub fn max_abs_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        worst = worst.max((x - y).abs());
    }
    worst
}

/// Both sides of the weighted-complement projector identity: for `D`
/// symmetric positive definite and `[R M]` a splitting with `RᵀM = 0`, the
/// projector onto `sp(D^{1/2}R)` equals `I` minus the projector onto
/// `sp(D^{-1/2}M)`. Returns `(left, right)` for the caller to compare.
pub fn prop1_projector(
    r: ArrayView2<'_, f64>,
    m: ArrayView2<'_, f64>,
    d: ArrayView2<'_, f64>,
    tol: f64,
) -> Result<(Projector, Projector)> {
    let (d_half, d_half_inv) = sym_sqrt_pair(d)?;
    let left = Projector::from_columns(d_half.dot(&r).view(), tol)?;
    let right = Projector::from_columns(d_half_inv.dot(&m).view(), tol)?.complement();
    Ok((left, right))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors)` with `a = V diag(λ) Vᵀ`.
pub(crate) fn sym_eigen(a: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.to_owned();
    let mut v = Array2::eye(n);
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() <= 1e-14 * frob.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (app, aqq) = (a[[p, p]], a[[q, q]]);
                a[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[p, k]] = a[[k, p]];
                    a[[k, q]] = s * akp + c * akq;
                    a[[q, k]] = a[[k, q]];
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diag().to_owned(), v)
}

/// `(D^{1/2}, D^{-1/2})` for a symmetric positive definite matrix; rejects
/// asymmetric input and eigenvalues at or below `1e-12` of the largest.
pub(crate) fn sym_sqrt_pair(d: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: d.ncols(),
        });
    }
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max_abs_diff(d, d.t()) > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveDefinite);
    }
    let (lambda, v) = sym_eigen(d);
    let lmax = lambda.iter().fold(0.0f64, |m, &x| m.max(x));
    if lmax <= 0.0 || lambda.iter().any(|&l| l <= 1e-12 * lmax) {
        return Err(Error::NotPositiveDefinite);
    }
    let mut half = Array2::zeros((n, n));
    let mut half_inv = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            let mut si = 0.0;
            for (k, &l) in lambda.iter().enumerate() {
                let root = l.sqrt();
                s += v[[i, k]] * root * v[[j, k]];
                si += v[[i, k]] / root * v[[j, k]];
            }
            half[[i, j]] = s;
            half_inv[[i, j]] = si;
        }
    }
    Ok((half, half_inv))
}
