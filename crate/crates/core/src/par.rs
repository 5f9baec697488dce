//! Data-parallel map helpers.
//!
//! All batch loops in the crate (quadrature nodes, grid sweeps, problem
//! batches) go through [`map_indexed`], which runs on rayon when the
//! `parallel` feature is enabled and sequentially otherwise. Results are
//! collected in index order, so sums taken over the returned vector are
//! bit-identical across both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(0..len)` and collect in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

/// Evaluate `f(0..len)` and collect in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Sequential reference implementation, always available so benchmarks can
/// compare both paths within one build.
pub fn map_indexed_serial<U, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..len).map(f).collect()
}
