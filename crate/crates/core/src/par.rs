//! Order-preserving maps that run on the rayon pool when the `parallel`
//! feature is enabled and the caller asks for it.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
/// Minimum batch size worth handing to the thread pool.
const MIN_PARALLEL: usize = 64;

pub(crate) fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() >= MIN_PARALLEL {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// True when this build can use more than one thread.
pub fn available() -> bool {
    cfg!(feature = "parallel")
}

/// Runs `f` with parallel sections limited to `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        return pool.install(f);
    }
    let _ = workers;
    f()
}
