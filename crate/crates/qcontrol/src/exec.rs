use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use qcontrol_core::optimizer::Executor;

/// Runs evaluation waves on a dedicated rayon pool. Results come back in job
/// order, and every job owns its stream, so the thread count never changes
/// the output.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads = 0` uses rayon's default (one per core).
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(RayonExecutor { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl std::fmt::Debug for RayonExecutor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RayonExecutor").field("threads", &self.threads()).finish()
    }
}

impl Executor for RayonExecutor {
    fn map(&self, len: usize, job: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        if len <= 1 || self.threads() == 1 {
            return (0..len).map(job).collect();
        }
        self.pool.install(|| (0..len).into_par_iter().map(job).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_job_order() {
        let ex = RayonExecutor::new(3).unwrap();
        let out = ex.map(100, &|i| (i * i) as f64);
        assert_eq!(out, (0..100).map(|i| (i * i) as f64).collect::<Vec<_>>());
    }
}
