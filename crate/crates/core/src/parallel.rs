use rayon::prelude::*;

use crate::error::{Error, Result};

/// Maps `f` over `0..n` on `workers` threads (the global pool when `None`)
/// and returns results in index order, so any reduction over the output is
/// independent of scheduling.
pub fn par_map_ordered<T, F>(workers: Option<usize>, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match workers {
        None => Ok((0..n).into_par_iter().map(f).collect()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
            Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
        }
    }
}
