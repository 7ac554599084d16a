//! Execution strategy for the data-parallel kernels.
//!
//! With the `parallel` feature (default) kernels fan out over rayon's pool;
//! without it, or with [`Strategy::Sequential`], they run on the calling
//! thread. Both paths produce bit-identical results: reductions are split
//! into fixed-size chunks whose partial sums are combined in order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk size for deterministic reductions.
pub(crate) const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Sequential,
    Parallel,
}

impl Default for Strategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Strategy::Parallel
        } else {
            Strategy::Sequential
        }
    }
}

impl Strategy {
    /// Whether work actually fans out; always false without the feature.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Parallel
    }
}

/// `(0..n).map(f).collect()`, in parallel when requested.
pub(crate) fn map_range<T, F>(strategy: Strategy, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = strategy;
    (0..n).map(f).collect()
}

/// Applies `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces.
pub(crate) fn for_each_chunk_mut<F>(strategy: Strategy, data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = strategy;
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// `Σ_{i<n} f(i)` with a fixed summation tree.
pub(crate) fn sum_range<F>(strategy: Strategy, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map_range(strategy, chunks, |c| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(n);
        (start..end).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_bitwise() {
        let f = |i: usize| 1.0 / (1.0 + i as f64);
        let n = 3 * CHUNK + 17;
        let a = sum_range(Strategy::Sequential, n, f);
        let b = sum_range(Strategy::Parallel, n, f);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(map_range(Strategy::Parallel, 5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn chunked_mutation_covers_everything() {
        let mut v = vec![0.0; 10];
        for_each_chunk_mut(Strategy::Parallel, &mut v, 3, |ci, c| {
            for (k, x) in c.iter_mut().enumerate() {
                *x = (ci * 3 + k) as f64;
            }
        });
        assert_eq!(v, (0..10).map(|i| i as f64).collect::<Vec<_>>());
    }
}
