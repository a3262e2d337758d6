//! Parallel map over independent items with results in index order.

use crate::error::{CliError, CliResult};
use rayon::prelude::*;

pub struct Pool {
    inner: rayon::ThreadPool,
}

impl Pool {
    /// `workers == 0` uses rayon's default thread count.
    pub fn new(workers: usize) -> CliResult<Self> {
        let inner = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        Ok(Pool { inner })
    }

    pub fn threads(&self) -> usize {
        self.inner.current_num_threads()
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync,
    {
        self.inner.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect())
    }
}
