//! Ordered map over independent work items, on a rayon pool when the
//! `parallel` feature is enabled and sequentially otherwise.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// `workers == 0` lets rayon pick the thread count.
    Parallel { workers: usize },
}

impl Execution {
    /// One worker means sequential.
    pub fn from_workers(workers: usize) -> Self {
        if workers == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }
}

/// `f(i, &items[i])` for every item, results in input order.
pub fn map_ordered<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            use rayon::prelude::*;
            let run = || items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
            match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(pool) => pool.install(run),
                Err(e) => {
                    log::warn!("thread pool unavailable ({e}); running on the global pool");
                    run()
                }
            }
        }
        _ => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
    }
}
