//! Compatibility layer for rayon/sequential execution.
//!
//! With the `parallel` feature (the default) the helpers fan work out over
//! rayon; without it they run the same closures sequentially. Every helper
//! keeps the output in input order and leaves each item's inner arithmetic
//! untouched, so results are bit-identical across both modes and any thread
//! count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, collecting results in order.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map `f` over the index range `0..n`, collecting results in order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Run `f` on each equal-length chunk of `out`, passing the chunk index.
/// Used to fill per-channel or per-row output buffers in place.
pub fn for_each_chunk<F>(out: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert!(chunk > 0 && out.len() % chunk == 0);
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}
