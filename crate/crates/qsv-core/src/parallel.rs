//! Batch execution helpers.
//!
//! Gap computation and optimization are sequential per instance; the
//! supported scaling axis is running many instances (sweep cells, Haar
//! samples, simulation runs) at once. The helpers here map a closure over a
//! batch, using rayon when the `parallel` feature is enabled and falling
//! back to a plain loop otherwise. Output order always matches input
//! order, so results merge deterministically regardless of scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::analysis::{spectral_gap, GapReport};
use crate::protocols::{build_strategy, ProtocolSpec};
use crate::states::PureState;
use crate::Result;

/// Map `f` over `items`, in parallel when the `parallel` feature is on.
pub fn map_batch<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Send + Sync,
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

/// Sequential reference path, available regardless of features. Benchmarks
/// compare this against [`map_batch`].
pub fn map_batch_sequential<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    F: Fn(&I) -> O,
{
    items.iter().map(f).collect()
}

/// Fallible variant of [`map_batch`]; returns the first error by input
/// order.
pub fn try_map_batch<I, O, F>(items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Send + Sync,
{
    map_batch(items, f).into_iter().collect()
}

/// Configure the global worker count. `None` keeps the library default
/// (one worker per core). Without the `parallel` feature this is a no-op.
pub fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        // Ignore the error from configuring twice; the pool is process-global.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    Ok(())
}

/// Build the protocol's strategy and compute the spectral gap for each
/// state in the batch.
pub fn gap_batch(spec: &ProtocolSpec, states: &[PureState]) -> Result<Vec<GapReport>> {
    try_map_batch(states, |state| {
        let strategy = build_strategy(spec, state)?;
        spectral_gap(&strategy, state)
    })
}

/// Sequential counterpart of [`gap_batch`].
pub fn gap_batch_sequential(spec: &ProtocolSpec, states: &[PureState]) -> Result<Vec<GapReport>> {
    map_batch_sequential(states, |state| {
        let strategy = build_strategy(spec, state)?;
        spectral_gap(&strategy, state)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::haar_random_stream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn map_batch_preserves_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = map_batch(&items, |&x| x * x);
        assert_eq!(out, items.iter().map(|&x| x * x).collect::<Vec<_>>());
    }

    #[test]
    fn try_map_batch_reports_first_error() {
        let items = vec![1i64, -3, -7];
        let err = try_map_batch(&items, |&x| {
            if x < 0 {
                Err(crate::QsvError::InvalidArgument(format!("bad {x}")))
            } else {
                Ok(x)
            }
        })
        .unwrap_err();
        assert!(err.to_string().contains("bad -3"));
    }

    #[test]
    fn parallel_and_sequential_gap_batches_agree() {
        let states: Vec<_> = (0..6)
            .map(|i| haar_random_stream(&[2, 2, 2], 5, i).unwrap())
            .collect();
        let spec = ProtocolSpec::parse("sd").unwrap();
        let par = gap_batch(&spec, &states).unwrap();
        let seq = gap_batch_sequential(&spec, &states).unwrap();
        for (a, b) in par.iter().zip(&seq) {
            assert_abs_diff_eq!(a.nu, b.nu, epsilon = 1e-14);
        }
    }

    #[test]
    fn configure_jobs_is_callable() {
        configure_jobs(Some(2)).unwrap();
        configure_jobs(None).unwrap();
    }
}
