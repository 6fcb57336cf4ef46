//! Datasets and design matrices.
//!
//! Every factor term is coded with a full set of indicator columns (one per
//! level combination, no reference level dropped), so the concatenated design
//! matrix is deliberately rank-deficient and all rank decisions are left to
//! the orthogonalization kernel. Factor levels are ordered by first
//! appearance in the data; cell indices are lexicographic in the level codes
//! with the first factor varying slowest.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::formula::{Term, TermList};

/// A categorical column: level labels in first-appearance order plus the
/// per-observation level codes.
#[derive(Debug, Clone)]
pub struct Factor {
    name: String,
    levels: Vec<String>,
    codes: Vec<usize>,
}

impl Factor {
    fn from_column(name: String, values: &[String]) -> Self {
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(values.len());
        for v in values {
            let code = match levels.iter().position(|l| l == v) {
                Some(i) => i,
                None => {
                    levels.push(v.clone());
                    levels.len() - 1
                }
            };
            codes.push(code);
        }
        Factor { name, levels, codes }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Level code of each observation, indexing into [`Factor::levels`].
    pub fn codes(&self) -> &[usize] {
        &self.codes
    }
}

/// A response vector together with its factor columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    response_name: String,
    y: Array1<f64>,
    factors: Vec<Factor>,
}

impl Dataset {
    /// Builds a dataset from in-memory columns. All columns must share the
    /// response's length and at least one observation is required.
    pub fn from_columns(
        response_name: impl Into<String>,
        y: Vec<f64>,
        factor_columns: Vec<(String, Vec<String>)>,
    ) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyData);
        }
        let n = y.len();
        let mut factors = Vec::with_capacity(factor_columns.len());
        for (name, values) in factor_columns {
            if values.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: values.len(),
                });
            }
            factors.push(Factor::from_column(name, &values));
        }
        Ok(Dataset {
            response_name: response_name.into(),
            y: Array1::from(y),
            factors,
        })
    }

    /// Reads a headed CSV file, taking `response` as the numeric response
    /// column and `factors` as categorical columns (values used verbatim as
    /// level labels).
    pub fn load_csv(path: impl AsRef<Path>, response: &str, factors: &[&str]) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|source| Error::CannotRead {
            path: path.display().to_string(),
            source,
        })?;
        let headers = reader.headers()?.clone();
        let col_of = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let y_col = col_of(response)?;
        let factor_cols: Vec<usize> = factors
            .iter()
            .map(|f| col_of(f))
            .collect::<Result<Vec<_>>>()?;

        let mut y = Vec::new();
        let mut columns: Vec<Vec<String>> = vec![Vec::new(); factors.len()];
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let raw = record.get(y_col).unwrap_or("");
            let value: f64 = raw.trim().parse().map_err(|_| Error::NonNumericResponse {
                row: row + 1,
                value: raw.to_string(),
            })?;
            y.push(value);
            for (k, &c) in factor_cols.iter().enumerate() {
                columns[k].push(record.get(c).unwrap_or("").trim().to_string());
            }
        }
        let factor_columns = factors
            .iter()
            .map(|f| f.to_string())
            .zip(columns)
            .collect();
        Self::from_columns(response, y, factor_columns)
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, name: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.name == name)
    }
}

/// Indicator columns for every term of a model, in model order, plus their
/// concatenation.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    model: TermList,
    blocks: Vec<(Term, Array2<f64>)>,
    x: Array2<f64>,
}

impl DesignMatrix {
    pub fn model(&self) -> &TermList {
        &self.model
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    /// The concatenated design matrix (blocks in model order).
    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn block(&self, term: &Term) -> Option<ArrayView2<'_, f64>> {
        self.blocks
            .iter()
            .find(|(t, _)| t == term)
            .map(|(_, b)| b.view())
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&Term, ArrayView2<'_, f64>)> {
        self.blocks.iter().map(|(t, b)| (t, b.view()))
    }
}

/// Builds the per-term indicator blocks for `model` over `data`.
///
/// A term's block has one column per combination of its factors' levels
/// (first factor slowest); the intercept's block is a single column of ones.
pub fn build_design(data: &Dataset, model: &TermList) -> Result<DesignMatrix> {
    let n = data.n_obs();
    let mut blocks = Vec::with_capacity(model.terms().len());
    for term in model.terms() {
        let term_factors: Vec<&Factor> = term
            .factors()
            .iter()
            .map(|name| {
                data.factor(name)
                    .ok_or_else(|| Error::UnknownFactor(name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let ncols: usize = term_factors.iter().map(|f| f.n_levels()).product();
        let mut block = Array2::zeros((n, ncols));
        for row in 0..n {
            let mut col = 0;
            for f in &term_factors {
                col = col * f.n_levels() + f.codes()[row];
            }
            block[[row, col]] = 1.0;
        }
        blocks.push((term.clone(), block));
    }
    let total: usize = blocks.iter().map(|(_, b)| b.ncols()).sum();
    let mut x = Array2::zeros((n, total));
    let mut at = 0;
    for (_, b) in &blocks {
        x.slice_mut(ndarray::s![.., at..at + b.ncols()])
            .assign(b);
        at += b.ncols();
    }
    Ok(DesignMatrix {
        model: model.clone(),
        blocks,
        x,
    })
}

/// Observation-by-cell incidence over the full cross of the given factors,
/// empty cells included as all-zero columns.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    k: Array2<f64>,
    counts: Vec<usize>,
    dims: Vec<usize>,
    row_cells: Vec<usize>,
}

impl IncidenceMatrix {
    pub fn k(&self) -> ArrayView2<'_, f64> {
        self.k.view()
    }

    /// Observations per cell, lexicographic in level codes.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Level counts per factor, in the order the factors were requested.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_cells(&self) -> usize {
        self.counts.len()
    }

    /// Cell index of each observation.
    pub fn row_cells(&self) -> &[usize] {
        &self.row_cells
    }

    pub fn n_empty(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Builds the incidence matrix of `data` over the named factors.
pub fn build_incidence(data: &Dataset, factors: &[&str]) -> Result<IncidenceMatrix> {
    let fs: Vec<&Factor> = factors
        .iter()
        .map(|name| {
            data.factor(name)
                .ok_or_else(|| Error::UnknownFactor(name.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = fs.iter().map(|f| f.n_levels()).collect();
    let n_cells = dims.iter().product();
    let n = data.n_obs();
    let mut k = Array2::zeros((n, n_cells));
    let mut counts = vec![0usize; n_cells];
    let mut row_cells = Vec::with_capacity(n);
    for row in 0..n {
        let mut cell = 0;
        for f in &fs {
            cell = cell * f.n_levels() + f.codes()[row];
        }
        k[[row, cell]] = 1.0;
        counts[cell] += 1;
        row_cells.push(cell);
    }
    Ok(IncidenceMatrix {
        k,
        counts,
        dims,
        row_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use ndarray::array;

    fn toy() -> Dataset {
        // 2x2, cell (a1,b2) has two observations, (a2,b1) empty.
        Dataset::from_columns(
            "y",
            vec![1.0, 2.0, 3.0, 4.0],
            vec![
                ("A".into(), vec!["a1", "a1", "a1", "a2"].into_iter().map(String::from).collect()),
                ("B".into(), vec!["b1", "b2", "b2", "b2"].into_iter().map(String::from).collect()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn levels_follow_first_appearance() {
        let d = toy();
        assert_eq!(d.factor("A").unwrap().levels(), ["a1", "a2"]);
        assert_eq!(d.factor("B").unwrap().levels(), ["b1", "b2"]);
        assert_eq!(d.factor("A").unwrap().codes(), [0, 0, 0, 1]);
    }

    #[test]
    fn design_blocks_are_full_indicator_coding() {
        let d = toy();
        let m = parse_formula("y ~ A*B").unwrap();
        let dm = build_design(&d, &m).unwrap();

        let a = dm.block(&crate::formula::Term::new(["A"]).unwrap()).unwrap();
        assert_eq!(a, array![[1., 0.], [1., 0.], [1., 0.], [0., 1.]]);

        let ab = dm
            .block(&crate::formula::Term::new(["A", "B"]).unwrap())
            .unwrap();
        // Columns: (a1,b1), (a1,b2), (a2,b1), (a2,b2).
        assert_eq!(
            ab,
            array![
                [1., 0., 0., 0.],
                [0., 1., 0., 0.],
                [0., 1., 0., 0.],
                [0., 0., 0., 1.]
            ]
        );

        // Every block is an indicator matrix: rows sum to one.
        for (_, b) in dm.blocks() {
            for row in b.rows() {
                assert_eq!(row.sum(), 1.0);
            }
        }
        assert_eq!(dm.x().ncols(), 1 + 2 + 2 + 4);
    }

    #[test]
    fn incidence_counts_and_empty_cells() {
        let d = toy();
        let inc = build_incidence(&d, &["A", "B"]).unwrap();
        assert_eq!(inc.dims(), [2, 2]);
        assert_eq!(inc.counts(), [1, 2, 0, 1]);
        assert_eq!(inc.n_empty(), 1);
        assert_eq!(inc.row_cells(), [0, 1, 1, 3]);
        // K matches the interaction block of the saturated design.
        let m = parse_formula("y ~ A*B").unwrap();
        let dm = build_design(&d, &m).unwrap();
        let ab = dm
            .block(&crate::formula::Term::new(["A", "B"]).unwrap())
            .unwrap();
        assert_eq!(inc.k(), ab);
    }

    #[test]
    fn unknown_model_factor_is_rejected() {
        let d = toy();
        let m = parse_formula("y ~ A + C").unwrap();
        assert!(matches!(
            build_design(&d, &m),
            Err(Error::UnknownFactor(name)) if name == "C"
        ));
    }

    #[test]
    fn column_length_mismatch_is_rejected() {
        let r = Dataset::from_columns(
            "y",
            vec![1.0, 2.0],
            vec![("A".into(), vec!["a".to_string()])],
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(
            Dataset::from_columns("y", vec![], vec![]),
            Err(Error::EmptyData)
        ));
    }
}
