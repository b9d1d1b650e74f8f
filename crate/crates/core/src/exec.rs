//! Execution policy for the per-node kernels.
//!
//! Node updates are independent, so every parallel kernel writes each output
//! slot from exactly one closure call and reductions happen afterwards in a
//! fixed order. Results are therefore bit-identical for any worker count.

/// How per-node kernels are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    /// Data-parallel over nodes on the current rayon pool. Falls back to
    /// sequential execution when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

/// Minimum nodes per parallel task; tiny grids stay on one thread.
#[cfg(feature = "parallel")]
const MIN_CHUNK_NODES: usize = 32;

/// Fills `out` (stride `width` per node) by calling `f(node, slot)`.
pub fn for_each_node<F>(policy: ExecPolicy, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    match policy {
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel if out.len() / width >= 2 * MIN_CHUNK_NODES => {
            use rayon::prelude::*;
            out.par_chunks_mut(width)
                .with_min_len(MIN_CHUNK_NODES)
                .enumerate()
                .for_each(|(j, slot)| f(j, slot));
        }
        _ => {
            for (j, slot) in out.chunks_mut(width).enumerate() {
                f(j, slot);
            }
        }
    }
}

/// Evaluates `f` at every index in `0..n` and collects in index order.
pub fn map_indices<T, F>(policy: ExecPolicy, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match policy {
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel if n >= 2 * MIN_CHUNK_NODES => {
            use rayon::prelude::*;
            (0..n)
                .into_par_iter()
                .with_min_len(MIN_CHUNK_NODES)
                .map(f)
                .collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Runs `op` with at most `workers` rayon threads. Without the `parallel`
/// feature this simply calls `op`.
pub fn with_workers<R: Send>(workers: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = workers {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("failed to build worker pool");
            return pool.install(op);
        }
    }
    let _ = workers;
    op()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_fill_identically() {
        let n = 1000;
        let kernel = |j: usize, slot: &mut [f64]| {
            let x = j as f64 * 0.37;
            slot[0] = x.sin() * x.exp().ln_1p();
            slot[1] = x.cos();
        };
        let mut a = vec![0.0; 2 * n];
        let mut b = vec![0.0; 2 * n];
        for_each_node(ExecPolicy::Sequential, &mut a, 2, kernel);
        with_workers(Some(4), || {
            for_each_node(ExecPolicy::Parallel, &mut b, 2, kernel)
        });
        assert_eq!(a, b);
        let m = map_indices(ExecPolicy::Parallel, n, |j| j * j);
        assert_eq!(m[999], 999 * 999);
    }
}
