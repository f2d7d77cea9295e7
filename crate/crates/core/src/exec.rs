//! Sequential / parallel execution switch for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through [`Execution::map`], which
//! always returns results in index order so that downstream reductions are
//! deterministic regardless of scheduling.

/// How data-parallel loops are executed.
///
/// Without the `parallel` feature, `Parallel` falls back to sequential
/// execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Evaluates `f(0..len)` and returns the results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    /// Runs `f` on every element of `items`, each call owning its element.
    pub fn for_each_mut<T, F>(self, items: Vec<T>, f: F)
    where
        T: Send,
        F: Fn(usize, T) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.into_par_iter().enumerate().for_each(|(i, x)| f(i, x));
            }
            _ => items.into_iter().enumerate().for_each(|(i, x)| f(i, x)),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}
