//! Index-ordered execution of independent replications.
//!
//! The closure receives the replication index and must derive all of its
//! randomness from it. Results come back in index order whatever the
//! worker count, so aggregation downstream is deterministic.

/// Evaluates `task(0..count)`. `workers = Some(1)` forces the calling
/// thread; `None` uses rayon's global pool.
#[cfg(feature = "parallel")]
pub fn run_indexed<T, F>(count: usize, workers: Option<usize>, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match workers {
        Some(0) | Some(1) => sequential(count, task),
        None => (0..count).into_par_iter().map(&task).collect(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&task).collect()),
            Err(_) => sequential(count, task),
        },
    }
}

#[cfg(not(feature = "parallel"))]
pub fn run_indexed<T, F>(count: usize, _workers: Option<usize>, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    sequential(count, task)
}

pub fn sequential<T, F>(count: usize, task: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(task).collect()
}
