//! Data-parallel map over trial indices with a sequential fallback.
//!
//! Results always come back in index order, so any reduction over them is
//! identical for every thread count and for both modes.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "CHANCEKIT_THREADS";

/// `(0..count).map(f)`, in parallel when the mode and build allow it.
pub fn map_indexed<T, F>(count: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Reads the thread cap from the environment, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Sizes the global pool. Has no effect without the `parallel` feature or
/// once the pool has been initialised.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let f = |i: usize| (i as f64).sqrt() * 3.0;
        let a = map_indexed(1000, ExecMode::Sequential, f);
        let b = map_indexed(1000, ExecMode::Parallel, f);
        assert_eq!(a, b);
        assert_eq!(a[4], 6.0);
    }
}
