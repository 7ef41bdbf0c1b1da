//! Opt-in data parallelism over independent rows.
//!
//! Rows are always computed by the same per-row code with a fixed inner
//! summation order, so the output does not depend on the thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rayon::ThreadPool;

/// Number of worker threads used for row-parallel loops. `1` runs serially.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threads(usize);

impl Threads {
    pub const SERIAL: Threads = Threads(1);

    pub fn new(n: usize) -> Self {
        Threads(n.max(1))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for Threads {
    fn default() -> Self {
        Threads::SERIAL
    }
}

fn pool(n: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = pools.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .expect("failed to build thread pool"),
            )
        })
        .clone()
}

/// Evaluates `f(i, scratch)` for `i in 0..n` and collects the results in
/// index order. Each worker owns one scratch buffer.
pub fn map_rows<T, F>(n: usize, threads: Threads, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Vec<f64>) -> T + Sync + Send,
{
    if threads.get() <= 1 {
        let mut scratch = Vec::new();
        return (0..n).map(|i| f(i, &mut scratch)).collect();
    }
    pool(threads.get()).install(|| {
        (0..n)
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| f(i, scratch))
            .collect()
    })
}
