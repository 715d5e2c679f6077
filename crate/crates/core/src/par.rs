//! Index-parallel map over independent tasks, with a sequential fallback when
//! the `parallel` feature is off or disabled at run time.

use crate::error::{Error, Result};

/// Caps the worker count of the global pool.
pub const THREADS_ENV: &str = "ENTCAP_THREADS";

/// `(0..n).map(f)` with results in index order regardless of scheduling.
pub fn map<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Reads [`THREADS_ENV`]; unset or empty means no cap.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidParameter(format!(
                "{THREADS_ENV}={s} is not a positive integer"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// Sizes the global worker pool. Only the first call has an effect.
pub fn init_thread_pool(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let _ = threads;
    Ok(())
}
