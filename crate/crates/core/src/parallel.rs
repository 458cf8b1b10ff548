//! Data-parallel map over independent cells.
//!
//! With the default `parallel` feature, `par_map` fans out over the rayon
//! global pool (thread count controlled by `RAYON_NUM_THREADS`); without it,
//! `par_map` degrades to the sequential loop. `seq_map` is always sequential
//! and exists so the bench suite can compare both paths in one build.
//!
//! Both return results in input order, so callers are deterministic
//! regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn par_map<T, O, F>(items: Vec<T>, f: F) -> Vec<O>
where
    T: Send,
    O: Send,
    F: Fn(T) -> O + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, O, F>(items: Vec<T>, f: F) -> Vec<O>
where
    T: Send,
    O: Send,
    F: Fn(T) -> O + Sync + Send,
{
    seq_map(items, f)
}

pub fn seq_map<T, O, F>(items: Vec<T>, f: F) -> Vec<O>
where
    F: Fn(T) -> O,
{
    items.into_iter().map(f).collect()
}
