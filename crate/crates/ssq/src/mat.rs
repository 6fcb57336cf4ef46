//! Small shared matrix helpers.

use ndarray::{s, Array2, ArrayView2};

/// Horizontal concatenation; `nrows` disambiguates the empty case.
pub(crate) fn hcat(nrows: usize, parts: &[ArrayView2<'_, f64>]) -> Array2<f64> {
    let total = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Array2::zeros((nrows, total));
    let mut at = 0;
    for p in parts {
        out.slice_mut(s![.., at..at + p.ncols()]).assign(p);
        at += p.ncols();
    }
    out
}
