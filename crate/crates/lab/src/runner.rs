//! Replicate execution. Replicate r always draws from stream r of the
//! master seed, so outputs do not depend on the worker count.

use crate::error::{LabError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Derive an independent master seed for a sub-experiment (one n of a grid,
/// one k of a list) so grids can be extended without reshuffling streams.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Runner {
    pub seed: u64,
    pub threads: usize,
}

impl Runner {
    pub fn new(seed: u64, threads: usize) -> Self {
        Runner { seed, threads: threads.max(1) }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Runner { seed, ..self }
    }

    /// f(r, rng_r) for r in 0..reps, collected in replicate order.
    pub fn map<T, F>(&self, reps: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
    {
        let seed = self.seed;
        let run = |r: u64| f(r, &mut replicate_rng(seed, r));
        if self.threads == 1 {
            return (0..reps).map(run).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| LabError::Pool(e.to_string()))?;
        pool.install(|| (0..reps).into_par_iter().map(run).collect())
    }
}
