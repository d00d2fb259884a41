//! Replica execution on a rayon pool.

use anyhow::{Context, Result};
use nearelastic_core::runner::ReplicaRunner;
use rayon::prelude::*;

/// Serial or work-stealing execution. Results always come back in replica
/// order, so the choice never changes an estimate.
#[derive(Debug)]
pub enum Runner {
    Serial,
    Pool(rayon::ThreadPool),
}

impl Runner {
    /// `None` uses one thread per core; `Some(1)` runs on the calling thread.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        match threads {
            Some(0) => anyhow::bail!("--threads must be at least 1"),
            Some(1) => Ok(Runner::Serial),
            _ => {
                let mut b = rayon::ThreadPoolBuilder::new();
                if let Some(n) = threads {
                    b = b.num_threads(n);
                }
                Ok(Runner::Pool(b.build().context("building the thread pool")?))
            }
        }
    }

    pub fn threads(&self) -> usize {
        match self {
            Runner::Serial => 1,
            Runner::Pool(p) => p.current_num_threads(),
        }
    }
}

impl ReplicaRunner for Runner {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Runner::Serial => (0..n).map(f).collect(),
            Runner::Pool(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_keeps_index_order() {
        let r = Runner::new(Some(4)).unwrap();
        let v = r.map(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == (i * i) as u64));
        assert_eq!(r.threads(), 4);
    }

    #[test]
    fn zero_threads_rejected() {
        assert!(Runner::new(Some(0)).is_err());
        assert!(matches!(Runner::new(Some(1)).unwrap(), Runner::Serial));
    }
}
