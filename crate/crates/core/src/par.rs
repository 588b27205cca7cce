//! Execution policy for the data-parallel loops (grid sampling, residual
//! vectors, Jacobian columns).
//!
//! Every parallel path collects into an index-ordered `Vec`, and all
//! reductions over those vectors run sequentially afterwards, so results are
//! bit-identical whatever the thread count. Without the `parallel` feature
//! [`Exec::Parallel`] silently runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// `f(0), f(1), ..., f(n-1)` in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Like [`Exec::map`] but stops at the first error in index order.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                // collect::<Result<Vec,_>> may report any failing index;
                // pick the lowest one so errors are deterministic too.
                let all: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
                all.into_iter().collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }
}
