//! Sums of squares for linear models with categorical factors.
//!
//! The library decomposes anova computations into small, checkable pieces:
//! a formula parser ([`formula`]), indicator-coded design matrices
//! ([`design`]), a source-tracking orthogonalization kernel ([`projector`]),
//! the Type I/II/III engines ([`sstypes`]), and an independent set of
//! two-factor cross-checks ([`twofactor`]) that reach the same hypotheses
//! through restricted models, weighted squares of means, and cell-mean
//! contrasts. [`simulate`] sweeps random layouts through those checks and
//! [`cli`] exposes the lot as a command-line tool.
//!
//! Everything runs on dense `f64` matrices. Rank decisions use a relative
//! tolerance of `1e-9` ([`projector::DEFAULT_TOL`]); per-term work in batch
//! operations goes through [`exec`], which is rayon-parallel under the
//! default `parallel` feature and sequential without it.

pub mod cli;
pub mod design;
pub mod dist;
pub mod error;
pub mod exec;
pub mod formula;
mod mat;
mod numfmt;
pub mod projector;
pub mod simulate;
pub mod sstypes;
pub mod twofactor;

pub use error::{Error, Result};
