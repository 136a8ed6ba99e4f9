//! Row-parallel execution helpers.
//!
//! Every hot kernel in the crate is expressed as an independent
//! computation per output row. With the `parallel` feature the rows are
//! distributed over the rayon pool once the estimated work crosses
//! [`PAR_MIN_WORK`]; below the threshold, or without the feature, the
//! rows run sequentially on the caller's thread.
//!
//! Within a row every loop runs in a fixed order and cross-row
//! reductions are always performed sequentially in row order by the
//! caller, so the numeric output is bit-identical regardless of feature
//! flags or thread count.

use std::sync::atomic::{AtomicBool, Ordering};

/// Minimum estimated work (inner-loop operations) before a kernel is
/// dispatched to the thread pool. Desk-scale batches stay sequential;
/// large evaluations and benchmark sizes parallelize.
pub const PAR_MIN_WORK: usize = 1 << 20;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Forces all kernels onto the sequential path even when the `parallel`
/// feature is enabled. Bench-suite knob for comparing both paths in one
/// process; not intended for library users.
#[doc(hidden)]
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

#[inline]
fn use_parallel(rows: usize, work_per_row: usize) -> bool {
    rows > 1
        && rows.saturating_mul(work_per_row) >= PAR_MIN_WORK
        && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// Applies `f` to each `cols`-wide row of `out`, parallelizing when the
/// estimated total work warrants it.
#[inline]
pub(crate) fn run_rows<F>(out: &mut [f64], cols: usize, work_per_row: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert!(cols > 0 && out.len() % cols == 0);
    #[cfg(feature = "parallel")]
    {
        let rows = out.len() / cols;
        if use_parallel(rows, work_per_row) {
            use rayon::prelude::*;
            out.par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, row)| f(i, row));
            return;
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = use_parallel(0, work_per_row);
    for (i, row) in out.chunks_mut(cols).enumerate() {
        f(i, row);
    }
}

/// Like [`run_rows`] but pairs each row with one scalar output slot.
/// Per-sample loss kernels use this to produce the gradient row and the
/// row's loss term in one pass; the caller then reduces the scalar slots
/// sequentially in row order.
#[inline]
pub(crate) fn run_rows_scalar<F>(
    out: &mut [f64],
    cols: usize,
    scalars: &mut [f64],
    work_per_row: usize,
    f: F,
) where
    F: Fn(usize, &mut [f64], &mut f64) + Sync + Send,
{
    debug_assert!(cols > 0 && out.len() % cols == 0);
    debug_assert_eq!(out.len() / cols, scalars.len());
    #[cfg(feature = "parallel")]
    {
        let rows = out.len() / cols;
        if use_parallel(rows, work_per_row) {
            use rayon::prelude::*;
            out.par_chunks_mut(cols)
                .zip(scalars.par_iter_mut())
                .enumerate()
                .for_each(|(i, (row, s))| f(i, row, s));
            return;
        }
    }
    for (i, (row, s)) in out.chunks_mut(cols).zip(scalars.iter_mut()).enumerate() {
        f(i, row, s);
    }
}
