//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) work is spread over the
//! rayon global pool. Without it, or with [`Execution::Sequential`], the
//! same closures run in a plain loop. Results are always returned in index
//! order so reductions downstream are deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution policy for batch work (replications, grid points, sweep rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this policy will actually run on multiple threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Map `f` over `0..len`, collecting results in index order.
pub fn map_indices<R, F>(len: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Map `f` over a slice, collecting results in input order.
pub fn map_slice<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indices(items.len(), exec, |i| f(&items[i]))
}
