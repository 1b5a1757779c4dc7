use gensobol_core::Batch;
use rayon::prelude::*;

/// Runs batch items on the rayon thread pool; results keep index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Batch for Parallel {
    fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, n: usize, f: F) -> Vec<T> {
        (0..n).into_par_iter().map(f).collect()
    }
}
