//! Execution policy hook. Library code describes independent work items and
//! hands them to an [`Executor`]; it never spawns workers itself. Callers
//! that want parallelism provide their own implementation.

pub trait Executor: Sync {
    /// Evaluates `f(0), ..., f(n-1)` and returns the results in index order.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
