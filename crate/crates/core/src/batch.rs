//! Execution strategy for embarrassingly parallel work.
//!
//! Every expensive loop in the crate (model runs, Monte Carlo chunks, fixing
//! studies) is expressed as "compute item `i` for `i in 0..n`, then combine in
//! index order". The combination order never depends on the executor, so a
//! parallel implementation returns exactly the same numbers as [`Sequential`].

use alloc::vec::Vec;

pub trait Batch: Sync {
    /// Evaluate `f(0), ..., f(n - 1)` and return the results in index order.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Batch for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
