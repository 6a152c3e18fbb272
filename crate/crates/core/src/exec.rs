#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How per-agent (or per-replica) work is scheduled.
///
/// Both modes evaluate the same closures on the same inputs and collect the
/// results in index order, so they produce bit-identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

// not derivable: the default variant depends on the feature set
#[allow(clippy::derivable_impls)]
impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub(crate) fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    pub(crate) fn map_mut<A, T, F>(self, items: &mut [A], f: F) -> Vec<T>
    where
        A: Send,
        T: Send,
        F: Fn(usize, &mut A) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter_mut().enumerate().map(|(i, a)| f(i, a)).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items
                .par_iter_mut()
                .enumerate()
                .map(|(i, a)| f(i, a))
                .collect(),
        }
    }

    /// Public entry point for replica-level Monte Carlo: evaluates `f(0..n)`.
    pub fn map_replicas<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.map_range(n, f)
    }
}
