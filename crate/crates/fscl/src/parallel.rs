//! Whole-run parallelism. Members are independent, results come back in
//! member order, and every reduction happens afterwards on one thread, so
//! the thread count never changes an artifact.

use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Worker pool; `threads = None` or `Some(0)` lets rayon choose.
pub struct Pool {
    inner: rayon::ThreadPool,
}

impl Pool {
    pub fn new(threads: Option<usize>) -> CliResult<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads.filter(|n| *n > 0) {
            builder = builder.num_threads(n);
        }
        let inner = builder.build().map_err(|e| CliError::Threads(e.to_string()))?;
        Ok(Self { inner })
    }

    pub fn threads(&self) -> usize {
        self.inner.current_num_threads()
    }

    /// `f(0), …, f(count − 1)` in order, failing with the lowest-index error.
    pub fn map<T, F>(&self, count: usize, f: F) -> CliResult<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> CliResult<T> + Sync,
    {
        let results: Vec<CliResult<T>> = self.inner.install(|| (0..count).into_par_iter().map(&f).collect());
        results.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_and_first_error() {
        let pool = Pool::new(Some(3)).unwrap();
        assert_eq!(pool.threads(), 3);
        assert_eq!(pool.map(50, |i| Ok(i * i)).unwrap(), (0..50).map(|i| i * i).collect::<Vec<_>>());
        let err = pool
            .map(10, |i| if i >= 4 { Err(CliError::Threads(format!("{i}"))) } else { Ok(i) })
            .unwrap_err();
        assert!(matches!(err, CliError::Threads(s) if s == "4"));
    }
}
