//! Serial/parallel execution of independent indexed tasks.

/// How independent work items (replicates, trials, row blocks) are scheduled.
///
/// Outputs are identical under both schedules; only wall-clock time differs.
/// Without the `parallel` feature, `Parallel` runs serially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Evaluates `f(0), …, f(n-1)` and returns the results in index order.
pub(crate) fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Like [`map_indexed`], but fails with the lowest-index error.
pub(crate) fn try_map_indexed<T, E, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    match exec {
        Execution::Serial => (0..n).map(f).collect(),
        Execution::Parallel => map_indexed(n, exec, f).into_iter().collect(),
    }
}
