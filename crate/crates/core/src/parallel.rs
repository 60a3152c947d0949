//! Monte-Carlo trial map.
//!
//! Trials are independent, so untimed batches fan out over a rayon pool when
//! the `parallel` feature is on. Results always come back in trial order.
//! Without the feature, or with [`Execution::Sequential`], trials run one
//! after the other on the calling thread.

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "COVACT_THREADS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    /// One trial at a time on the calling thread (used whenever timing).
    Sequential,
    /// Trials spread over worker threads; `None` means one per hardware thread.
    #[default]
    Parallel,
}

/// Worker count from `COVACT_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Evaluates `f(0..count)` and returns the results in index order.
pub fn map_trials<T, F>(count: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    match exec {
        Execution::Sequential => (0..count).map(f).collect(),
        Execution::Parallel => parallel_map(count, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    use rayon::prelude::*;
    let run = || (0..count).into_par_iter().map(&f).collect();
    match threads_from_env() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(err) => {
                log::warn!("could not build a {n}-thread pool ({err}), using the global pool");
                run()
            }
        },
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..count).map(f).collect()
}
