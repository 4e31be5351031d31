//! Data-parallel helpers.
//!
//! With the `parallel` feature these fan out over rayon's pool; without it
//! they run the same closures sequentially. Reductions always combine
//! per-item partial results in index order, so results are bit-identical
//! at any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(i)` for `i in 0..len`, collecting in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Sums `f(i)` over `0..len` with a fixed left-to-right reduction order.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(len, f).into_iter().sum()
}

/// Runs `f(chunk_index, chunk)` over consecutive `chunk_len`-sized chunks.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

/// Sizes the global pool. Returns false if it was already initialized or
/// the crate was built without the `parallel` feature.
pub fn configure_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// Number of worker threads currently available.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(100, |i| i * 2);
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn chunked_writes_land_in_place() {
        let mut data = vec![0usize; 12];
        for_each_chunk_mut(&mut data, 4, |c, chunk| {
            for x in chunk.iter_mut() {
                *x = c;
            }
        });
        assert_eq!(data, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn sum_is_order_fixed() {
        let a = sum_indexed(1000, |i| 1.0 / (i as f64 + 1.0));
        let b: f64 = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).sum();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
