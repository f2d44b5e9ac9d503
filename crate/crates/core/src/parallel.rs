//! Order-preserving map over independent work items, on the rayon pool when
//! the `parallel` feature is enabled and in a plain loop otherwise.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// `true` when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Applies `f` to every item; results keep the input order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Like [`map`], stopping at the first error in input order.
pub fn try_map<T, R, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    map(exec, items, f).into_iter().collect()
}

/// Runs `op` with at most `jobs` worker threads. `None` keeps the global
/// pool. Without the `parallel` feature this just calls `op`.
pub fn with_jobs<R: Send>(jobs: Option<usize>, op: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        Some(0) => Err(Error::InvalidParameter("jobs must be ≥ 1".into())),
        #[cfg(feature = "parallel")]
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(op))
        }
        _ => Ok(op()),
    }
}
