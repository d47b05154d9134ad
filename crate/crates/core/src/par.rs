//! Data-parallel map over independent jobs.
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it, or when `parallel` is false, jobs run in order on the calling
//! thread. Output order always matches input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn par_map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return items.par_iter().map(f).collect();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Whether this build can run jobs in parallel at all.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
