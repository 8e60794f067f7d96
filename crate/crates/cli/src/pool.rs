use mmchan_core::Executor;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::progress::Progress;

/// Runs library work items on a rayon pool, advancing `progress` once per
/// finished item.
pub struct PoolExec<'a> {
    pub pool: &'a ThreadPool,
    pub progress: Option<&'a Progress>,
}

impl Executor for PoolExec<'_> {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let progress = self.progress;
        self.pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let out = f(i);
                    if let Some(p) = progress {
                        p.advance(1);
                    }
                    out
                })
                .collect()
        })
    }
}

pub fn build_pool(workers: usize) -> Result<ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build()
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
