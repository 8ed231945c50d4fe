//! Data-parallel execution of independent design runs.
//!
//! Sweep points, Monte-Carlo seeds and baselines form an embarrassingly
//! parallel work queue. With the `parallel` feature (default) the queue runs
//! on the rayon thread pool; without it the same API degrades to a plain
//! sequential loop, which the benchmark suite uses as the comparison
//! baseline. Output order always matches input order.

/// Map `f` over `items` in parallel when the `parallel` feature is active.
#[cfg(feature = "parallel")]
pub fn run_tasks<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Sequential fallback with the same signature.
#[cfg(not(feature = "parallel"))]
pub fn run_tasks<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential map, kept available so benchmarks can compare both
/// execution paths within one build.
pub fn run_tasks_sequential<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}
