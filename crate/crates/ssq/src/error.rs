use thiserror::Error;

/// Crate-wide error type.
///
/// Domain errors (bad formulas, degenerate layouts, singular matrices) are
/// distinguished from environment errors (I/O, CSV) so the CLI can map them
/// to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("formula syntax error at byte {offset}: {message}")]
    FormulaSyntax { offset: usize, message: String },

    #[error("duplicate factor `{factor}` within a term")]
    DuplicateFactor { factor: String },

    #[error("formula right-hand side is empty")]
    EmptyRhs,

    #[error("term `{0}` is not in the model")]
    TermNotInModel(String),

    #[error("column `{0}` not found in the input data")]
    MissingColumn(String),

    #[error("row {row}: response value `{value}` is not numeric")]
    NonNumericResponse { row: usize, value: String },

    #[error("dataset has no rows")]
    EmptyData,

    #[error("factor `{0}` is not part of the dataset")]
    UnknownFactor(String),

    #[error("no columns to orthogonalize")]
    EmptyInput,

    #[error("dimension mismatch: {left} vs {right} rows")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("factor needs at least {min} levels, got {got}")]
    TooFewLevels { min: usize, got: usize },

    #[error("weighted-means analysis is undefined when the layout has empty cells")]
    MwsmUndefined,

    #[error("expected exactly two factors, got {0}")]
    NotTwoFactor(usize),

    #[error("sum of squares is negative beyond numerical tolerance: {0}")]
    NegativeSumOfSquares(f64),

    #[error("degrees of freedom are zero")]
    ZeroDegreesOfFreedom,

    #[error("cannot read `{path}`: {source}")]
    CannotRead { path: String, source: csv::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
