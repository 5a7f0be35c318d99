use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Environment variable naming the default worker count.
pub const WORKERS_ENV: &str = "RACKPINION_WORKERS";

/// Worker count from `RACKPINION_WORKERS`, else the available cores.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

pub(crate) fn pool(workers: Option<usize>) -> Result<ThreadPool> {
    let n = workers.unwrap_or_else(default_workers);
    if n == 0 {
        return Err(Error::invalid("workers", "must be >= 1"));
    }
    ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}
