//! Execution-mode switch for the data-parallel inner loops.
//!
//! Study rows and the interior updates of a Cauchy time step are
//! embarrassingly parallel.  With the `parallel` feature (default) the
//! `Threaded` mode runs them on the rayon pool; without it `Threaded`
//! silently degrades to the sequential path so the public API does not
//! change across feature combinations.  Results are bitwise identical in
//! both modes: every parallel map writes independent outputs in index
//! order and performs no cross-thread reductions.

/// How to execute independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Plain single-threaded loops.
    Sequential,
    /// Rayon data parallelism when the `parallel` feature is enabled.
    #[default]
    Threaded,
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<R, F>(par: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if par == Parallelism::Threaded {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = par;
    (0..n).map(f).collect()
}

/// Fill `out[i] = f(i)`, splitting into chunks across the pool when threaded.
/// Below `min_len` items the sequential path is used regardless; spawning
/// threads for tiny grids costs more than it saves.
pub fn fill_indexed<F>(par: Parallelism, out: &mut [f64], min_len: usize, f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if par == Parallelism::Threaded && out.len() >= min_len {
            use rayon::prelude::*;
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, slot)| *slot = f(i));
            return;
        }
    }
    let _ = (par, min_len);
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}
