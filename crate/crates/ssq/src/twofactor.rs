//! Independent cross-checks for two-factor layouts.
//!
//! For a complete `a x b` layout the main-effect hypothesis can be reached
//! by three routes that look nothing alike:
//!
//! * the restricted-model route: `y'[P_K - P_{K(I-H)}]y` over the cell
//!   incidence `K`, with `H` one of the Kronecker-product hypothesis
//!   projectors below;
//! * the weighted-squares-of-means route: a weighted between-groups sum over
//!   the unweighted row means of cell means, with harmonic cell weights;
//! * the contrast route: `(W'm)'(W' D W)^- (W'm)` over the cell means `m`
//!   and any contrast basis `W` spanning the effect.
//!
//! All three must match the Type III value from `sstypes` when every cell is
//! filled; [`equivalence_report`] computes the lot and compares. With empty
//! cells the weighted-means form is undefined and the restricted-model
//! hypothesis loses degrees of freedom relative to Type III, which the
//! report surfaces instead of papering over.

use std::fmt;

use ndarray::linalg::kron;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::design::{build_design, build_incidence, Dataset};
use crate::error::{Error, Result};
use crate::formula::{Term, TermList};
use crate::numfmt::fmt_g;
use crate::projector::{gram_schmidt, Projector, DEFAULT_TOL};
use crate::sstypes::{clamp_ss, type2_ss, type3_components, type3_ss, SSResult};

/// Cell structure of a two-factor dataset, in lexicographic cell order with
/// the first factor varying slowest.
#[derive(Debug, Clone)]
pub struct TwoFactorLayout {
    a_name: String,
    b_name: String,
    a: usize,
    b: usize,
    counts: Vec<usize>,
    k: Array2<f64>,
    cell_means: Vec<Option<f64>>,
    d_ab_diag: Option<Array1<f64>>,
    u: Option<Array1<f64>>,
    d_a_diag: Option<Array1<f64>>,
}

impl TwoFactorLayout {
    /// Builds the layout from a dataset with exactly two factors, taking the
    /// dataset's factor order as the (A, B) orientation.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        let fs = data.factors();
        if fs.len() != 2 {
            return Err(Error::NotTwoFactor(fs.len()));
        }
        let a_name = fs[0].name().to_string();
        let b_name = fs[1].name().to_string();
        let inc = build_incidence(data, &[&a_name, &b_name])?;
        let a = inc.dims()[0];
        let b = inc.dims()[1];
        let counts = inc.counts().to_vec();
        let k = inc.k().to_owned();
        let cell_means = means_from(&k, &counts, data.y());
        let (d_ab_diag, u, d_a_diag) = split_parts(derived_parts(a, b, &counts, &cell_means));
        Ok(TwoFactorLayout {
            a_name,
            b_name,
            a,
            b,
            counts,
            k,
            cell_means,
            d_ab_diag,
            u,
            d_a_diag,
        })
    }

    /// The same data viewed with the factors swapped, so every A-oriented
    /// computation can be reused for B.
    pub fn transposed(&self) -> Self {
        let (a, b) = (self.b, self.a);
        let mut counts = vec![0usize; a * b];
        let mut cell_means = vec![None; a * b];
        let mut k = Array2::zeros((self.k.nrows(), a * b));
        for i in 0..self.a {
            for j in 0..self.b {
                let from = i * self.b + j;
                let to = j * self.a + i;
                counts[to] = self.counts[from];
                cell_means[to] = self.cell_means[from];
                k.column_mut(to).assign(&self.k.column(from));
            }
        }
        let (d_ab_diag, u, d_a_diag) = split_parts(derived_parts(a, b, &counts, &cell_means));
        TwoFactorLayout {
            a_name: self.b_name.clone(),
            b_name: self.a_name.clone(),
            a,
            b,
            counts,
            k,
            cell_means,
            d_ab_diag,
            u,
            d_a_diag,
        }
    }

    pub fn a_name(&self) -> &str {
        &self.a_name
    }

    pub fn b_name(&self) -> &str {
        &self.b_name
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn n_obs(&self) -> usize {
        self.k.nrows()
    }

    /// Per-cell observation counts, row-major.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn k(&self) -> ArrayView2<'_, f64> {
        self.k.view()
    }

    /// Cell means of the dataset's own response; `None` marks empty cells.
    pub fn cell_means(&self) -> &[Option<f64>] {
        &self.cell_means
    }

    /// Diagonal of `D = diag(1/n_ij)`; defined only when every cell is
    /// filled.
    pub fn d_ab_diag(&self) -> Option<ArrayView1<'_, f64>> {
        self.d_ab_diag.as_ref().map(Array1::view)
    }

    /// Row sums of cell means, `u_i = sum_j m_ij`.
    pub fn u(&self) -> Option<ArrayView1<'_, f64>> {
        self.u.as_ref().map(Array1::view)
    }

    /// Diagonal of `D_a = diag(sum_j 1/n_ij)`.
    pub fn d_a_diag(&self) -> Option<ArrayView1<'_, f64>> {
        self.d_a_diag.as_ref().map(Array1::view)
    }

    pub fn all_filled(&self) -> bool {
        self.counts.iter().all(|&c| c > 0)
    }

    pub fn n_empty(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }

    /// Cell means of an arbitrary response over this layout's cells.
    pub fn means_of(&self, y: ArrayView1<'_, f64>) -> Result<Vec<Option<f64>>> {
        if y.len() != self.k.nrows() {
            return Err(Error::DimensionMismatch {
                left: y.len(),
                right: self.k.nrows(),
            });
        }
        Ok(means_from(&self.k, &self.counts, y))
    }
}

fn means_from(k: &Array2<f64>, counts: &[usize], y: ArrayView1<'_, f64>) -> Vec<Option<f64>> {
    let sums = k.t().dot(&y);
    counts
        .iter()
        .zip(sums.iter())
        .map(|(&n, &s)| (n > 0).then(|| s / n as f64))
        .collect()
}

type DerivedParts = (Option<Array1<f64>>, Option<Array1<f64>>, Option<Array1<f64>>);

fn split_parts(parts: Option<(Array1<f64>, Array1<f64>, Array1<f64>)>) -> DerivedParts {
    match parts {
        Some((d_ab, u, d_a)) => (Some(d_ab), Some(u), Some(d_a)),
        None => (None, None, None),
    }
}

/// `(diag D, u, diag D_a)` for a layout, or `None` with any empty cell.
fn derived_parts(
    a: usize,
    b: usize,
    counts: &[usize],
    means: &[Option<f64>],
) -> Option<(Array1<f64>, Array1<f64>, Array1<f64>)> {
    if counts.contains(&0) {
        return None;
    }
    let d_ab = Array1::from_iter(counts.iter().map(|&n| 1.0 / n as f64));
    let mut u = Array1::zeros(a);
    let mut d_a = Array1::zeros(a);
    for i in 0..a {
        for j in 0..b {
            let cell = i * b + j;
            u[i] += means[cell].unwrap();
            d_a[i] += d_ab[cell];
        }
    }
    Some((d_ab, u, d_a))
}

/// The four Kronecker-product projectors that split `ab`-dimensional cell
/// space into grand-mean, A, B, and interaction subspaces.
#[derive(Debug, Clone)]
pub struct HypothesisMatrices {
    /// `(1/a) * ones(a, a)`.
    pub u_a: Array2<f64>,
    /// `I_a - u_a`, the centering projector for A.
    pub s_a: Array2<f64>,
    pub u_b: Array2<f64>,
    pub s_b: Array2<f64>,
    /// `u_a ⊗ u_b`: grand mean.
    pub h00: Array2<f64>,
    /// `s_a ⊗ u_b`: main effect of A.
    pub h10: Array2<f64>,
    /// `u_a ⊗ s_b`: main effect of B.
    pub h01: Array2<f64>,
    /// `s_a ⊗ s_b`: interaction.
    pub h11: Array2<f64>,
}

fn mean_projector(m: usize) -> Array2<f64> {
    Array2::from_elem((m, m), 1.0 / m as f64)
}

fn centering(m: usize) -> Array2<f64> {
    let mut s = mean_projector(m);
    s.mapv_inplace(|v| -v);
    for i in 0..m {
        s[[i, i]] += 1.0;
    }
    s
}

/// Builds the hypothesis projectors for an `a x b` layout; both factors need
/// at least two levels.
pub fn h_matrices(a: usize, b: usize) -> Result<HypothesisMatrices> {
    for m in [a, b] {
        if m < 2 {
            return Err(Error::TooFewLevels { min: 2, got: m });
        }
    }
    let u_a = mean_projector(a);
    let s_a = centering(a);
    let u_b = mean_projector(b);
    let s_b = centering(b);
    Ok(HypothesisMatrices {
        h00: kron(&u_a, &u_b),
        h10: kron(&s_a, &u_b),
        h01: kron(&u_a, &s_b),
        h11: kron(&s_a, &s_b),
        u_a,
        s_a,
        u_b,
        s_b,
    })
}

/// Restricted-model sum of squares: `y'[P_K - P_{K(I-H)}]y`.
///
/// Since `sp(K(I-H))` is nested in `sp(K)`, the difference is computed by
/// source-tracked orthogonalization rather than subtracting projectors, and
/// the degrees of freedom fall out as the rank gap. Works with empty cells,
/// where the rank gap can be smaller than the factor's nominal df.
pub fn rmfm_ss(
    y: ArrayView1<'_, f64>,
    layout: &TwoFactorLayout,
    h: ArrayView2<'_, f64>,
    term: &Term,
) -> Result<SSResult> {
    let cells = layout.a * layout.b;
    if h.nrows() != cells || h.ncols() != cells {
        return Err(Error::DimensionMismatch {
            left: h.nrows(),
            right: cells,
        });
    }
    if y.len() != layout.k.nrows() {
        return Err(Error::DimensionMismatch {
            left: y.len(),
            right: layout.k.nrows(),
        });
    }
    let mut i_minus_h = -h.to_owned();
    for i in 0..cells {
        i_minus_h[[i, i]] += 1.0;
    }
    let restricted = layout.k.dot(&i_minus_h);
    let basis = gram_schmidt(&[restricted.view(), layout.k.view()], DEFAULT_TOL)?;
    let q = basis.columns_from(1);
    let coords = q.t().dot(&y);
    Ok(SSResult {
        term: term.clone(),
        ss: clamp_ss(coords.dot(&coords))?,
        df: q.ncols(),
        f: None,
        p: None,
        hypothesis: None,
    })
}

/// Weighted squares of means for the layout's A factor:
/// `sum_i w_i u_i^2 - (sum_i w_i u_i)^2 / sum_i w_i` with `u_i` the row sums
/// of cell means and `w_i = 1 / sum_j (1/n_ij)`. Undefined with empty cells.
pub fn mwsm_ss(y: ArrayView1<'_, f64>, layout: &TwoFactorLayout, term: &Term) -> Result<SSResult> {
    if !layout.all_filled() {
        return Err(Error::MwsmUndefined);
    }
    let means = layout.means_of(y)?;
    let mut u = vec![0.0; layout.a];
    let mut d_a = vec![0.0; layout.a];
    for i in 0..layout.a {
        for j in 0..layout.b {
            let cell = i * layout.b + j;
            u[i] += means[cell].unwrap();
            d_a[i] += 1.0 / layout.counts[cell] as f64;
        }
    }
    let mut sw = 0.0;
    let mut swu = 0.0;
    let mut swuu = 0.0;
    for i in 0..layout.a {
        let w = 1.0 / d_a[i];
        sw += w;
        swu += w * u[i];
        swuu += w * u[i] * u[i];
    }
    Ok(SSResult {
        term: term.clone(),
        ss: clamp_ss(swuu - swu * swu / sw)?,
        df: layout.a - 1,
        f: None,
        p: None,
        hypothesis: None,
    })
}

/// The observation-space projector whose quadratic form reproduces the
/// weighted-squares-of-means value: the projector onto
/// `sp(K D (S_a ⊗ 1_b))`.
pub fn mwsm_projector(layout: &TwoFactorLayout) -> Result<Projector> {
    let d = layout.d_ab_diag().ok_or(Error::MwsmUndefined)?;
    let hm = h_matrices(layout.a, layout.b)?;
    let mut kd = layout.k.to_owned();
    for (j, mut col) in kd.columns_mut().into_iter().enumerate() {
        col *= d[j];
    }
    let cols = kd.dot(&kron(&hm.s_a, &Array2::ones((layout.b, 1))));
    Projector::from_columns(cols.view(), DEFAULT_TOL)
}

/// Contrast-form sum of squares `(W'm)'(W' D W)^- (W'm)` for a contrast
/// basis `W` over the cells, evaluated through the orthogonalization kernel
/// as the squared projection of `D^{-1/2} m` onto `sp(D^{1/2} W)`.
pub fn contrast_ss(
    y: ArrayView1<'_, f64>,
    layout: &TwoFactorLayout,
    w: ArrayView2<'_, f64>,
    term: &Term,
) -> Result<SSResult> {
    let d = layout.d_ab_diag().ok_or(Error::MwsmUndefined)?;
    let cells = layout.a * layout.b;
    if w.nrows() != cells {
        return Err(Error::DimensionMismatch {
            left: w.nrows(),
            right: cells,
        });
    }
    let means = layout.means_of(y)?;
    let mut z = Array1::zeros(cells);
    let mut c = w.to_owned();
    for cell in 0..cells {
        let root = d[cell].sqrt();
        z[cell] = means[cell].unwrap() / root;
        for q in 0..c.ncols() {
            c[[cell, q]] *= root;
        }
    }
    let basis = gram_schmidt(&[c.view()], DEFAULT_TOL)?;
    let coords = basis.q().t().dot(&z);
    Ok(SSResult {
        term: term.clone(),
        ss: clamp_ss(coords.dot(&coords))?,
        df: basis.rank(),
        f: None,
        p: None,
        hypothesis: None,
    })
}

/// One factor's slice of the equivalence report.
#[derive(Debug, Clone, Serialize)]
pub struct FactorEquivalence {
    /// Contrast-form SS (complete layouts only).
    pub contrast_ss: Option<f64>,
    /// Whether Type II and Type III agree on degrees of freedom.
    pub df_match: bool,
    pub factor: String,
    /// Worst pairwise relative gap among the defined SS routes.
    pub max_rel_discrepancy: Option<f64>,
    /// Weighted-squares-of-means SS (complete layouts only).
    pub mwsm_ss: Option<f64>,
    pub rmfm_df: usize,
    /// Whether the restricted-model df equals the Type III df; expected to
    /// fail when empty cells cut into the hypothesis.
    pub rmfm_df_matches_type3: bool,
    pub rmfm_ss: f64,
    /// `|Type III - RMFM|`, reported when the layout has empty cells.
    pub ss_gap: Option<f64>,
    pub type2_df: usize,
    pub type2_ss: f64,
    pub type3_df: usize,
    pub type3_ss: f64,
}

/// Cross-method comparison over a two-factor dataset.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub a_levels: usize,
    pub a_name: String,
    pub b_levels: usize,
    pub b_name: String,
    pub empty_cells: usize,
    pub factors: Vec<FactorEquivalence>,
    pub n_obs: usize,
    pub passed: bool,
    pub tolerance: f64,
}

fn rel_gap(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1e-12)
}

fn factor_side(
    design: &crate::design::DesignMatrix,
    y: ArrayView1<'_, f64>,
    layout: &TwoFactorLayout,
) -> Result<FactorEquivalence> {
    let term = Term::new([layout.a_name.as_str()])?;
    let comp = type3_components(design, &term)?;
    let r3 = type3_ss(y, &comp)?;
    let r2 = type2_ss(design, &term, y)?;
    let hm = h_matrices(layout.a, layout.b)?;
    let rm = rmfm_ss(y, layout, hm.h10.view(), &term)?;

    let (mwsm, contrast, disc, gap) = if layout.all_filled() {
        let mw = mwsm_ss(y, layout, &term)?;
        let w = kron(&hm.s_a, &Array2::ones((layout.b, 1)));
        let cs = contrast_ss(y, layout, w.view(), &term)?;
        let vals = [r3.ss, rm.ss, mw.ss, cs.ss];
        let mut worst = 0.0f64;
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                worst = worst.max(rel_gap(vals[i], vals[j]));
            }
        }
        (Some(mw.ss), Some(cs.ss), Some(worst), None)
    } else {
        (None, None, None, Some((r3.ss - rm.ss).abs()))
    };

    let df_match = r2.df == r3.df;
    let rmfm_df_matches_type3 = rm.df == r3.df;
    Ok(FactorEquivalence {
        contrast_ss: contrast,
        df_match,
        factor: layout.a_name.clone(),
        max_rel_discrepancy: disc,
        mwsm_ss: mwsm,
        rmfm_df: rm.df,
        rmfm_df_matches_type3,
        rmfm_ss: rm.ss,
        ss_gap: gap,
        type2_df: r2.df,
        type2_ss: r2.ss,
        type3_df: r3.df,
        type3_ss: r3.ss,
    })
}

/// Runs every route over both factors of a two-factor dataset and compares.
///
/// `tolerance` bounds the acceptable relative discrepancy between routes on
/// complete layouts; the verdict also requires Type II and Type III to agree
/// on degrees of freedom (and, when all cells are filled, the
/// restricted-model df to match Type III).
pub fn equivalence_report(data: &Dataset, tolerance: f64) -> Result<EquivalenceReport> {
    let layout = TwoFactorLayout::from_dataset(data)?;
    let layout_t = layout.transposed();
    let model = TermList::new(
        data.response_name(),
        vec![
            Term::intercept(),
            Term::new([layout.a_name.as_str()])?,
            Term::new([layout.b_name.as_str()])?,
            Term::new([layout.a_name.as_str(), layout.b_name.as_str()])?,
        ],
    );
    let design = build_design(data, &model)?;
    let y = data.y();

    let side_a = factor_side(&design, y, &layout)?;
    let side_b = factor_side(&design, y, &layout_t)?;

    let all_filled = layout.all_filled();
    let passed = [&side_a, &side_b].iter().all(|s| {
        s.df_match
            && (!all_filled
                || (s.rmfm_df_matches_type3
                    && s.max_rel_discrepancy.is_some_and(|d| d <= tolerance)))
    });

    Ok(EquivalenceReport {
        a_levels: layout.a,
        a_name: layout.a_name.clone(),
        b_levels: layout.b,
        b_name: layout.b_name.clone(),
        empty_cells: layout.n_empty(),
        factors: vec![side_a, side_b],
        n_obs: data.n_obs(),
        passed,
        tolerance,
    })
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "two-factor layout: {} ({} levels) x {} ({} levels), n={}, empty cells={}",
            self.a_name, self.a_levels, self.b_name, self.b_levels, self.n_obs, self.empty_cells
        )?;
        for s in &self.factors {
            write!(
                f,
                "factor {}: type III ss={} df={}; type II ss={} df={}; RMFM ss={} df={}",
                s.factor,
                fmt_g(s.type3_ss),
                s.type3_df,
                fmt_g(s.type2_ss),
                s.type2_df,
                fmt_g(s.rmfm_ss),
                s.rmfm_df,
            )?;
            match (s.mwsm_ss, s.contrast_ss) {
                (Some(mw), Some(cs)) => {
                    writeln!(f, "; MWSM ss={}; contrast ss={}", fmt_g(mw), fmt_g(cs))?
                }
                _ => writeln!(f, "; MWSM undefined")?,
            }
            if let Some(d) = s.max_rel_discrepancy {
                writeln!(f, "  max relative discrepancy = {d:.3e}")?;
            }
            if let Some(gap) = s.ss_gap {
                writeln!(
                    f,
                    "  df split: type III df={}, RMFM df={}; |type III - RMFM| = {}",
                    s.type3_df,
                    s.rmfm_df,
                    fmt_g(gap)
                )?;
            }
            if !s.df_match {
                writeln!(f, "  type II df {} != type III df {}", s.type2_df, s.type3_df)?;
            }
        }
        write!(f, "verdict: {}", if self.passed { "pass" } else { "fail" })
    }
}
