//! Replica execution strategy.
//!
//! Drivers express an ensemble as a pure function of the replica index, so
//! the order or thread a replica runs on cannot change its result.

/// Maps a replica function over `0..n`, returning results in index order.
pub trait ReplicaRunner {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

use alloc::vec::Vec;

/// Runs replicas one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl ReplicaRunner for Serial {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

impl<R: ReplicaRunner + ?Sized> ReplicaRunner for &R {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (**self).map(n, f)
    }
}
