//! Execution strategy for the data-parallel hot paths.
//!
//! Monte Carlo trials, sweep points, and per-subcarrier solver updates are
//! independent, so they run through [`map_indexed`]: rayon when the `parallel`
//! feature is enabled and [`Execution::Parallel`] is requested, a plain loop
//! otherwise. Results are collected in index order, so the choice never
//! affects output bytes.

/// Runtime switch between the rayon path and the sequential fallback.
///
/// With the `parallel` feature disabled, `Parallel` silently degrades to the
/// sequential loop so callers never need to care which build they are on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Parallel,
    Sequential,
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel
    }
}

/// Applies `f` to `0..n` and collects the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        Execution::Sequential => (0..n).map(f).collect(),
    }
}

/// Applies `f` to `0..n` and collects the results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(_exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
