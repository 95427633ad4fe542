//! Execution policy for data-parallel inner loops.
//!
//! Every parallel loop in the crate writes into disjoint output slots and
//! keeps a fixed per-slot summation order, so `Sequential` and `Parallel`
//! produce bit-identical results. Without the `parallel` feature,
//! `Parallel` silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Fill `out[i] = f(i)`.
pub fn fill_indexed<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
        return;
    }
    let _ = exec;
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Apply `f(row_index, row)` to consecutive chunks of `row_len` elements.
pub fn for_each_row<T, F>(exec: Exec, out: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
        return;
    }
    let _ = exec;
    for (r, row) in out.chunks_mut(row_len).enumerate() {
        f(r, row);
    }
}

/// Map over independent jobs, preserving input order in the output.
pub fn map_jobs<I, O, F>(exec: Exec, inputs: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return inputs.into_par_iter().map(f).collect();
    }
    let _ = exec;
    inputs.into_iter().map(f).collect()
}
