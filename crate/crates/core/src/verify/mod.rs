//! Oracles and Monte Carlo audits.
//!
//! Every sampler here splits its draws into chunks of [`CHUNK`]; chunk `i`
//! uses `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so results depend
//! only on the seed and not on the number of worker threads.

mod audit;
mod law;
mod tail;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::models::{CoupledSample, ModelSpec, PairSampler, StatisticKind};

pub use audit::{
    audit_coupling, audit_domination, run_suite, CouplingReport, DominationReport, DominationRow, IdentityCheck,
    SuiteEntry, SuiteReport, CSV_HEADER, TV_TOLERANCE,
};
pub use law::{brute_force_law, exact_size_bias_law, DiscreteLaw};
pub use tail::{wilson_halfwidth, EmpiricalTail, TailEstimate, WILSON_Z};

/// Draws per random stream.
pub const CHUNK: usize = 4096;

/// Generator for chunk `stream` of a run seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of an independent sub-run, derived from `seed` and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    use rand::RngCore;
    stream_rng(seed, u64::MAX - tag).next_u64()
}

fn chunked<T: Send>(
    n: usize,
    seed: u64,
    draw: impl Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let chunks = n.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let len = CHUNK.min(n - i * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// `n` independent draws of the full statistic.
pub fn sample_statistics(model: &ModelSpec, kind: StatisticKind, n: usize, seed: u64) -> Result<Vec<f64>> {
    chunked(n, seed, |rng| {
        let config = model.sample_configuration(rng)?;
        model.statistic(&config, kind)
    })
}

/// `n` independent coupled pairs.
pub fn sample_pairs(sampler: &dyn PairSampler, n: usize, seed: u64) -> Result<Vec<CoupledSample>> {
    chunked(n, seed, |rng| sampler.sample(rng))
}
