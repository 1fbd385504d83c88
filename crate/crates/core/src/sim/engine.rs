//! Deterministic block reduction over trials.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::SimError;

/// Trials per block. Blocks are reduced sequentially inside and merged in
/// block order, so sums do not depend on the number of workers.
pub(crate) const BLOCK: u64 = 2048;

pub(crate) fn reduce_blocks<A, I, R, M>(trials: u64, init: I, run: R, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    R: Fn(u64, &mut A) + Sync,
    M: Fn(&mut A, A),
{
    let blocks = trials.div_ceil(BLOCK);
    let block = |b: u64| {
        let mut acc = init();
        for t in b * BLOCK..((b + 1) * BLOCK).min(trials) {
            run(t, &mut acc);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<A> = (0..blocks).into_par_iter().map(block).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<A> = (0..blocks).map(block).collect();
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}

/// Maps `f` over `0..n` in order; parallel when the feature is on.
pub(crate) fn map_trials<T: Send>(n: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    return (0..n).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..n).map(f).collect();
}

/// Sums in index order.
pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v)
}

/// Runs `f` on a pool of `workers` threads, or on the global pool when
/// `None`. Without the `parallel` feature everything runs on the caller.
pub fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, SimError> {
    #[cfg(feature = "parallel")]
    {
        match workers {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| SimError::Pool(e.to_string()))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(f())
    }
}

/// Applies `f` to every item and returns the results in item order.
pub(crate) fn map_mut<T: Send, R: Send>(
    items: &mut [T],
    f: impl Fn(&mut T) -> R + Sync + Send,
) -> Vec<R> {
    #[cfg(feature = "parallel")]
    return items.par_iter_mut().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return items.iter_mut().map(f).collect();
}
