//! Parallel/sequential execution shims.
//!
//! Every data-parallel loop in the crate goes through these helpers so that
//! the `parallel` feature swaps rayon in and out at one place. Results are
//! always collected in index order and reduced sequentially afterwards, so a
//! given seed produces bit-identical output regardless of feature flags or
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}
