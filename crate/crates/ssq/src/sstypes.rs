//! Type I, II, and III sums of squares.
//!
//! All three reduce to quadratic forms `y'Py` for projectors assembled from
//! the model's term blocks. Type I orthogonalizes the blocks in model order
//! and credits each block with the directions it contributes. Type II
//! projects onto what the target adds beyond the terms not containing it.
//! Type III projects onto the part of `sp(X)` orthogonal to both the
//! non-containing terms and a twisted copy of the containing terms:
//!
//! 1. orthogonalize `(X0, X1, X)` and keep the columns contributed by `X`,
//!    a basis `N01` of `sp(X0, X1)^⊥ ∩ sp(X)`;
//! 2. form `X2* = X2 X2' N01`, the containing blocks bent into that
//!    complement;
//! 3. orthogonalize `(X0, X2*, X)`; the columns contributed by `X` span the
//!    Type III subspace, and the sum of squares is the squared projection of
//!    `y` onto them.
//!
//! The resulting hypothesis compares cell means with the same weights a
//! balanced design would use, which is what makes the Type III value match
//! the weighted-means oracles checked in `twofactor`.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::design::DesignMatrix;
use crate::dist::f_upper_tail;
use crate::error::{Error, Result};
use crate::exec;
use crate::formula::{partition_for_target, Term};
use crate::mat::hcat;
use crate::projector::{gram_schmidt, DEFAULT_TOL};

/// Which family of sums of squares to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsType {
    I,
    II,
    III,
}

impl fmt::Display for SsType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SsType::I => "I",
            SsType::II => "II",
            SsType::III => "III",
        })
    }
}

impl std::str::FromStr for SsType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(SsType::I),
            "II" | "2" => Ok(SsType::II),
            "III" | "3" => Ok(SsType::III),
            other => Err(format!("unknown sum-of-squares type `{other}`")),
        }
    }
}

/// The matrices behind one term's Type III quadratic form.
#[derive(Debug, Clone)]
pub struct TypePartitionMatrices {
    pub term: Term,
    /// Concatenated blocks of terms not containing the target.
    pub x0: Array2<f64>,
    /// The target term's block.
    pub x1: Array2<f64>,
    /// Concatenated blocks of terms strictly containing the target.
    pub x2: Array2<f64>,
    /// Orthonormal basis of `sp(X0, X1)^⊥ ∩ sp(X)`.
    pub n01: Array2<f64>,
    /// `X2 X2' N01`: the containing blocks projected through `N01`.
    pub x2star: Array2<f64>,
    /// Orthonormal basis of the Type III subspace.
    pub q3: Array2<f64>,
}

/// One row of an anova table.
#[derive(Debug, Clone)]
pub struct SSResult {
    pub term: Term,
    pub ss: f64,
    pub df: usize,
    pub f: Option<f64>,
    pub p: Option<f64>,
    /// The estimable comparison being tested: the target block adjusted for
    /// the non-containing terms, `(I - P_{X0}) X1`. Absent for Type I rows.
    pub hypothesis: Option<Array2<f64>>,
}

/// A complete anova table: per-term rows plus the residual line.
#[derive(Debug, Clone)]
pub struct AnovaTable {
    pub ss_type: SsType,
    pub rows: Vec<SSResult>,
    pub sse: f64,
    pub dfe: usize,
}

impl AnovaTable {
    pub fn mse(&self) -> Option<f64> {
        (self.dfe > 0).then(|| self.sse / self.dfe as f64)
    }
}

/// Tiny negative quadratic forms are roundoff; anything beyond the tolerance
/// is a real defect and reported as an error.
pub(crate) fn clamp_ss(ss: f64) -> Result<f64> {
    if ss < -1e-10 {
        Err(Error::NegativeSumOfSquares(ss))
    } else {
        Ok(ss.max(0.0))
    }
}

fn block_of<'d>(design: &'d DesignMatrix, term: &Term) -> Result<ArrayView2<'d, f64>> {
    design
        .block(term)
        .ok_or_else(|| Error::TermNotInModel(term.to_string()))
}

fn concat_blocks(design: &DesignMatrix, terms: &[Term]) -> Result<Array2<f64>> {
    let views = terms
        .iter()
        .map(|t| block_of(design, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(hcat(design.n_obs(), &views))
}

/// `(I - P_{X0}) X1`, the adjusted target block stating the hypothesis.
fn adjusted_block(x0: ArrayView2<'_, f64>, x1: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let q0 = gram_schmidt(&[x0], DEFAULT_TOL)?;
    let coeffs = q0.q().t().dot(&x1);
    Ok(&x1.to_owned() - &q0.q().dot(&coeffs))
}

/// Builds the Type III partition matrices for one target term.
pub fn type3_components(design: &DesignMatrix, target: &Term) -> Result<TypePartitionMatrices> {
    let partition = partition_for_target(design.model(), target)?;
    let n = design.n_obs();
    let x0 = concat_blocks(design, &partition.not_containing)?;
    let x1 = block_of(design, target)?.to_owned();
    let x2 = concat_blocks(design, &partition.containing)?;
    let x = design.x();

    let basis = gram_schmidt(&[x0.view(), x1.view(), x], DEFAULT_TOL)?;
    let n01 = basis.columns_from(2);

    let x2star = if x2.ncols() == 0 {
        Array2::zeros((n, 0))
    } else {
        x2.dot(&x2.t().dot(&n01))
    };

    let basis = gram_schmidt(&[x0.view(), x2star.view(), x], DEFAULT_TOL)?;
    let q3 = basis.columns_from(2);

    Ok(TypePartitionMatrices {
        term: target.clone(),
        x0,
        x1,
        x2,
        n01,
        x2star,
        q3,
    })
}

/// Type III sum of squares for a prepared partition.
pub fn type3_ss(y: ArrayView1<'_, f64>, comp: &TypePartitionMatrices) -> Result<SSResult> {
    if y.len() != comp.q3.nrows() {
        return Err(Error::DimensionMismatch {
            left: y.len(),
            right: comp.q3.nrows(),
        });
    }
    let coords = comp.q3.t().dot(&y);
    let ss = clamp_ss(coords.dot(&coords))?;
    let hypothesis = adjusted_block(comp.x0.view(), comp.x1.view())?;
    Ok(SSResult {
        term: comp.term.clone(),
        ss,
        df: comp.q3.ncols(),
        f: None,
        p: None,
        hypothesis: Some(hypothesis),
    })
}

/// Type II sum of squares: what the target adds beyond the terms that do not
/// contain it, ignoring the containing terms entirely.
pub fn type2_ss(
    design: &DesignMatrix,
    target: &Term,
    y: ArrayView1<'_, f64>,
) -> Result<SSResult> {
    let partition = partition_for_target(design.model(), target)?;
    let x0 = concat_blocks(design, &partition.not_containing)?;
    let x1 = block_of(design, target)?;
    if y.len() != design.n_obs() {
        return Err(Error::DimensionMismatch {
            left: y.len(),
            right: design.n_obs(),
        });
    }
    let basis = gram_schmidt(&[x0.view(), x1], DEFAULT_TOL)?;
    let q1 = basis.columns_from(1);
    let coords = q1.t().dot(&y);
    let ss = clamp_ss(coords.dot(&coords))?;
    Ok(SSResult {
        term: target.clone(),
        ss,
        df: q1.ncols(),
        f: None,
        p: None,
        hypothesis: Some(adjusted_block(x0.view(), x1)?),
    })
}

/// Sequential (Type I) table: each term in model order is credited with the
/// directions its block adds beyond everything before it. The intercept gets
/// its own row; `f`/`p` are filled where both df and dfe are positive.
pub fn type1_table(design: &DesignMatrix, y: ArrayView1<'_, f64>) -> Result<AnovaTable> {
    if y.len() != design.n_obs() {
        return Err(Error::DimensionMismatch {
            left: y.len(),
            right: design.n_obs(),
        });
    }
    let views: Vec<ArrayView2<'_, f64>> = design.blocks().map(|(_, b)| b).collect();
    let basis = gram_schmidt(&views, DEFAULT_TOL)?;
    let coords = basis.q().t().dot(&y);
    let sse = clamp_ss(y.dot(&y) - coords.dot(&coords))?;
    let dfe = design.n_obs() - basis.rank();

    let mut rows = Vec::new();
    for (i, (term, _)) in design.blocks().enumerate() {
        let qi = basis.columns_from(i);
        let ci = qi.t().dot(&y);
        let ss = clamp_ss(ci.dot(&ci))?;
        rows.push(SSResult {
            term: term.clone(),
            ss,
            df: qi.ncols(),
            f: None,
            p: None,
            hypothesis: None,
        });
    }
    attach_f(&mut rows, sse, dfe)?;
    Ok(AnovaTable {
        ss_type: SsType::I,
        rows,
        sse,
        dfe,
    })
}

/// Numerator noncentrality direction: the Type III basis applied to a mean
/// vector. Its squared norm is the noncentrality sum of squares for `mu`.
pub fn ncp_delta(comp: &TypePartitionMatrices, mu: ArrayView1<'_, f64>) -> Array1<f64> {
    comp.q3.t().dot(&mu)
}

/// F statistic and upper-tail p-value for a numerator row against the
/// residual line.
pub fn f_statistic(num: &SSResult, sse: f64, dfe: usize) -> Result<(f64, f64)> {
    if num.df == 0 || dfe == 0 {
        return Err(Error::ZeroDegreesOfFreedom);
    }
    let mse = sse / dfe as f64;
    if mse == 0.0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let f = num.ss / num.df as f64 / mse;
    let p = f_upper_tail(f, num.df, dfe);
    Ok((f, p))
}

fn attach_f(rows: &mut [SSResult], sse: f64, dfe: usize) -> Result<()> {
    for row in rows {
        if row.df > 0 && dfe > 0 {
            let (f, p) = f_statistic(row, sse, dfe)?;
            row.f = Some(f);
            row.p = Some(p);
        }
    }
    Ok(())
}

/// Full anova table of the requested type. Type II and III tables list the
/// non-intercept terms in model order; per-term work runs through [`exec`].
pub fn anova(design: &DesignMatrix, y: ArrayView1<'_, f64>, ss_type: SsType) -> Result<AnovaTable> {
    if let SsType::I = ss_type {
        return type1_table(design, y);
    }
    if y.len() != design.n_obs() {
        return Err(Error::DimensionMismatch {
            left: y.len(),
            right: design.n_obs(),
        });
    }
    let views: Vec<ArrayView2<'_, f64>> = design.blocks().map(|(_, b)| b).collect();
    let basis = gram_schmidt(&views, DEFAULT_TOL)?;
    let coords = basis.q().t().dot(&y);
    let sse = clamp_ss(y.dot(&y) - coords.dot(&coords))?;
    let dfe = design.n_obs() - basis.rank();

    let targets: Vec<Term> = design
        .model()
        .terms()
        .iter()
        .filter(|t| !t.is_intercept())
        .cloned()
        .collect();
    let results = exec::map_collect(targets, |term| match ss_type {
        SsType::II => type2_ss(design, &term, y),
        _ => type3_components(design, &term).and_then(|comp| type3_ss(y, &comp)),
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    attach_f(&mut rows, sse, dfe)?;
    Ok(AnovaTable {
        ss_type,
        rows,
        sse,
        dfe,
    })
}
