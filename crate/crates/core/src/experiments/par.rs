//! Trial-level parallelism. Results always come back in trial order, so the
//! two execution modes produce identical output.

/// How [`map_trials`] runs its closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on, otherwise sequential.
    #[default]
    Parallel,
}

/// Worker cap from `MMKEYGEN_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("MMKEYGEN_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// `f(0..n)` collected in index order.
pub fn map_trials<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    let run = || (0..n).into_par_iter().map(&f).collect();
    match thread_cap() {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!("cannot build a {k}-thread pool ({e}), using the global pool");
                run()
            }
        },
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
