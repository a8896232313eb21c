// SPDX-License-Identifier: Apache-2.0

//! Batch execution policy. With the `parallel` feature (default) batches are
//! spread over the rayon pool; without it `Exec::Parallel` runs sequentially.

/// How per-sample batch work is scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    /// Order-preserving map over a slice.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
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

    /// Maps each item to an accumulator and merges them. `merge` must be
    /// associative with `identity` as its unit.
    pub fn map_reduce<T, A, F, I, M>(self, items: &[T], identity: I, f: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        F: Fn(&T) -> A + Sync + Send,
        I: Fn() -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).reduce(identity, merge)
            }
            _ => items.iter().map(f).fold(identity(), merge),
        }
    }
}
