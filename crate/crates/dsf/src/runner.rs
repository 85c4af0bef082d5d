//! Deterministic parallel replications.

use rayon::prelude::*;

use dsf_core::math::derive_seed;
use dsf_core::PoissonStore;

use crate::config::ExperimentConfig;
use crate::RunError;

/// Thread pool plus the seed root of one run.
#[derive(Debug)]
pub struct Runner {
    pool: rayon::ThreadPool,
    seed: u64,
    tag: u64,
    lambda: f64,
}

impl Runner {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, RunError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| RunError::Runtime(format!("thread pool: {e}")))?;
        Ok(Runner {
            pool,
            seed: cfg.seed,
            tag: cfg.experiment.tag(),
            lambda: cfg.lambda,
        })
    }

    /// Seed of replication `rep` in stream `stream`.
    pub fn seed(&self, stream: u64, rep: u64) -> u64 {
        derive_seed(self.seed, &[self.tag, stream, rep])
    }

    /// A fresh store for replication `rep` in stream `stream`.
    pub fn store(&self, stream: u64, rep: u64) -> Result<PoissonStore, dsf_core::Error> {
        PoissonStore::with_intensity(self.lambda, self.seed(stream, rep))
    }

    /// Runs `f` on `lo..hi` in parallel. Results come back in index order,
    /// and the error of the lowest failing index wins, so the outcome does
    /// not depend on the thread count.
    pub fn map<T, F>(&self, what: &str, lo: u64, hi: u64, f: F) -> Result<Vec<T>, RunError>
    where
        T: Send,
        F: Fn(u64) -> Result<T, dsf_core::Error> + Sync + Send,
    {
        let results: Vec<Result<T, dsf_core::Error>> =
            self.pool.install(|| (lo..hi).into_par_iter().map(&f).collect());
        results
            .into_iter()
            .zip(lo..)
            .map(|(r, i)| r.map_err(|e| RunError::core(format!("{what}, replication {i}"), e)))
            .collect()
    }
}
