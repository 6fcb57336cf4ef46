//! Batch execution strategy.
//!
//! With the default `parallel` feature, [`map_collect`] fans work out across
//! a rayon thread pool; without it, the same call runs sequentially with
//! identical results and ordering. [`map_collect_seq`] is always sequential
//! and exists so benchmarks can compare the two paths inside one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to each item, preserving input order in the output.
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Sequential twin of [`map_collect`], kept as a baseline.
pub fn map_collect_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
