//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it they
//! run in a plain loop. [`set_sequential`] forces the sequential path at run
//! time so both paths can be compared in one build.
//!
//! Reductions are always formed from fixed-size chunk partials summed left to
//! right, so floating point results are bitwise identical whichever path runs.

use std::sync::atomic::{AtomicBool, Ordering};

/// Amplitudes per work unit for the state kernels.
pub const CHUNK: usize = 1 << 12;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// Calls `f(chunk_index, chunk)` for every `chunk`-sized piece of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && data.len() > chunk {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Like [`for_each_chunk_mut`] over two equally long slices in lockstep.
pub fn for_each_chunk_pair_mut<T, F>(a: &mut [T], b: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T], &mut [T]) + Sync + Send,
{
    assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if is_parallel() && a.len() > chunk {
        use rayon::prelude::*;
        a.par_chunks_mut(chunk)
            .zip(b.par_chunks_mut(chunk))
            .enumerate()
            .for_each(|(i, (x, y))| f(i, x, y));
        return;
    }
    a.chunks_mut(chunk)
        .zip(b.chunks_mut(chunk))
        .enumerate()
        .for_each(|(i, (x, y))| f(i, x, y));
}

/// Maps every `chunk`-sized piece of `data` and returns the results in order.
pub fn map_chunks<T, R, F>(data: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && data.len() > chunk {
        use rayon::prelude::*;
        return data
            .par_chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect();
    }
    data.chunks(chunk)
        .enumerate()
        .map(|(i, c)| f(i, c))
        .collect()
}

/// Deterministic sum of `f` over chunks.
pub fn chunked_sum<T, F>(data: &[T], chunk: usize, f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &[T]) -> f64 + Sync + Send,
{
    map_chunks(data, chunk, f).into_iter().sum()
}

/// `(0..n).map(f).collect()`, possibly in parallel, always in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_identical_on_both_paths() {
        let data: Vec<f64> = (0..50_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let f = |_: usize, c: &[f64]| c.iter().sum::<f64>();
        set_sequential(false);
        let a = chunked_sum(&data, 1000, f);
        set_sequential(true);
        let b = chunked_sum(&data, 1000, f);
        set_sequential(false);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_range_keeps_order() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
