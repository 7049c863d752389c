//! Replicate-level parallel map with index-ordered results.
//!
//! Every replicate derives its randomness from `(master seed, index)` alone, and
//! results come back in index order, so any reduction over the returned vector
//! is independent of the worker count.

use serde::Serialize;

use crate::error::Result;

/// Runs `f(0..count)` on `workers` threads (0 = all cores) and returns the results in index order.
#[cfg(feature = "parallel")]
pub fn map_replicates<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::error::Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

/// Sequential fallback: `workers` is accepted and ignored.
#[cfg(not(feature = "parallel"))]
pub fn map_replicates<T, F>(count: usize, _workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    Ok((0..count).map(f).collect())
}

/// Like [`map_replicates`] but stops at the first error (by index).
pub fn try_map_replicates<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_replicates(count, workers, f)?.into_iter().collect()
}

/// Whether this build runs replicates on a thread pool.
pub const PARALLEL: bool = cfg!(feature = "parallel");

/// Sample mean and standard error `s / sqrt(R)` with the unbiased sample deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl McSummary {
    /// `None` for an empty sample. A single replicate has zero standard error.
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        let r = xs.len();
        if r == 0 {
            return None;
        }
        // Shifted by the first sample: exact for constant samples, and less
        // cancellation in the variance.
        let x0 = xs[0];
        let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / r as f64;
        let stderr = if r > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1) as f64;
            (var / r as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            stderr,
            count: r,
        })
    }
}
