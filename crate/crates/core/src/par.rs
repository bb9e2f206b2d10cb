//! Data-parallel helpers.
//!
//! With the `parallel` feature enabled, work is spread over the rayon pool.
//! Without it, or when [`Execution::Sequential`] is requested, everything runs
//! on the calling thread. Results are always returned in index order so the
//! two paths are interchangeable.

use serde::{Deserialize, Serialize};

/// Whether the crate was built with rayon support.
pub const PARALLEL_AVAILABLE: bool = cfg!(feature = "parallel");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        PARALLEL_AVAILABLE && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_range<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Returns the result for the smallest index `i` in `0..n` with `f(i) = Some(_)`.
pub fn find_map_first<T, F>(n: usize, exec: Execution, f: F) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().find_map_first(f);
    }
    let _ = exec;
    (0..n).find_map(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let seq = map_range(100, Execution::Sequential, |i| i * i);
        let par = map_range(100, Execution::Parallel, |i| i * i);
        assert_eq!(seq, par);
    }

    #[test]
    fn find_first_is_lowest_index() {
        let f = |i: usize| if i % 7 == 3 { Some(i) } else { None };
        assert_eq!(find_map_first(50, Execution::Parallel, f), Some(3));
        assert_eq!(find_map_first(50, Execution::Sequential, f), Some(3));
        assert_eq!(find_map_first(3, Execution::Parallel, f), None);
    }
}
