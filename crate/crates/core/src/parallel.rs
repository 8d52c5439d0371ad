//! Index-ordered parallel map. Output order is the index order whatever the
//! thread count, which is what keeps seeded runs bit-reproducible.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..n).map(f).collect()
}

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "DISTILL_LAB_THREADS";

/// Size the global worker pool: `requested` (or the machine default),
/// capped by `DISTILL_LAB_THREADS` when set. Returns the count in effect.
/// Thread count never changes results, only wall time.
#[cfg(feature = "parallel")]
pub fn configure_threads(requested: Option<usize>) -> usize {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    let wanted = requested.filter(|&n| n > 0).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let n = cap.map_or(wanted, |c| wanted.min(c));
    // A second call keeps the first pool; report what is actually running.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_requested: Option<usize>) -> usize {
    1
}
