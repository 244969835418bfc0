//! Data-parallel map helpers.
//!
//! Simulation fan-out points (sweep points, trajectories, Wigner grid rows)
//! go through [`map_collect`], which dispatches to rayon when the `parallel`
//! feature is enabled and to a plain sequential loop otherwise. Both paths
//! return results in input order, so outputs are independent of scheduling.
//! [`map_collect_seq`] (and, with the feature, [`map_collect_par`]) stay
//! available unconditionally so benchmarks can compare the two directly.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential indexed map, always available.
pub fn map_collect_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
    U: Send,
{
    (0..n).map(f).collect()
}

/// Rayon-backed indexed map; results are collected in index order.
#[cfg(feature = "parallel")]
pub fn map_collect_par<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
    U: Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Indexed map over `0..n`, parallel when the `parallel` feature is on.
pub fn map_collect<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U + Sync + Send,
    U: Send,
{
    #[cfg(feature = "parallel")]
    {
        map_collect_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_collect_seq(n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as f64).sqrt() * 3.0 + 1.0;
        let seq = map_collect_seq(257, f);
        let auto = map_collect(257, f);
        assert_eq!(seq, auto);
    }
}
