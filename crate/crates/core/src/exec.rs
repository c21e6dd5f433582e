//! Data-parallel execution with a sequential fallback.
//!
//! Every sampling loop in the crate is split into fixed-size chunks. Chunk `i`
//! draws from ChaCha stream `i` of the caller's seed, and chunk results are
//! merged in chunk order. The work split therefore never depends on the number
//! of threads, and the parallel and sequential paths produce identical bits.
//!
//! With the `parallel` feature (default) chunks run on the rayon pool; the
//! mode can still be forced to [`Mode::Sequential`] at runtime, which is what
//! the benches compare against.

use std::ops::Range;
use std::sync::atomic::{AtomicU8, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per work item for all chunked sampling loops.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(if cfg!(feature = "parallel") { 1 } else { 0 });

/// Current execution mode. Always `Sequential` without the `parallel` feature.
pub fn mode() -> Mode {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 1 {
        Mode::Parallel
    } else {
        Mode::Sequential
    }
}

pub fn set_mode(mode: Mode) {
    MODE.store(
        match mode {
            Mode::Sequential => 0,
            Mode::Parallel => 1,
        },
        Ordering::Relaxed,
    );
}

/// Seeded generator for one work item.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `0..total` into `CHUNK`-sized ranges and maps `f(chunk_index, range)`
/// over them, returning results in chunk order.
pub fn map_chunks<T, F>(total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Range<usize>) -> T + Sync + Send,
{
    let n_chunks = total.div_ceil(CHUNK);
    let range_of = |i: usize| i * CHUNK..((i + 1) * CHUNK).min(total);
    map_indexed(n_chunks, |i| f(i as u64, range_of(i)))
}

/// Maps `f` over `0..count` in index order, in parallel when enabled.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode() {
        #[cfg(feature = "parallel")]
        Mode::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunks_cover_range_in_order() {
        let got = map_chunks(10_000, |_, r| (r.start, r.end));
        assert_eq!(got.first(), Some(&(0, CHUNK)));
        assert_eq!(got.last().unwrap().1, 10_000);
        for w in got.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!(map_chunks(0, |_, r| r).is_empty());
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream_rng(7, 0).random();
        let b: u64 = stream_rng(7, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, stream_rng(7, 0).random::<u64>());
    }
}
