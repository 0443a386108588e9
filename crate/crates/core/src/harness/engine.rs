//! Seeded, block-partitioned Monte Carlo execution.
//!
//! Trials are cut into fixed-size blocks. Block `b` of agent `i` under
//! hypothesis `h` draws from its own ChaCha stream derived from the master
//! seed, and blocks are merged in index order, so results do not depend on
//! the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::belief::{run_trial, HumanAgent, TrialRecord};
use crate::error::{Error, Result};
use crate::observation::{Hypothesis, ObservationModel};

pub const BLOCK_SIZE: u64 = 8192;

pub fn stream_id(h: Hypothesis, agent: usize, block: u64) -> u64 {
    debug_assert!(agent < 1 << 16 && block < 1 << 32);
    (u64::from(h.index()) << 48) | ((agent as u64) << 32) | block
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `job(block, len)` for every block on a pool of `workers` threads
/// and concatenates the outputs in block order.
pub fn run_blocks<T, F>(trials: u64, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Vec<T> + Sync,
{
    let blocks = trials.div_ceil(BLOCK_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let chunks: Vec<Vec<T>> = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let len = BLOCK_SIZE.min(trials - b * BLOCK_SIZE);
                job(b, len)
            })
            .collect()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// `trials` independent trials of one agent under one hypothesis.
#[allow(clippy::too_many_arguments)]
pub fn simulate_agent<M: ObservationModel + Sync>(
    agent: &HumanAgent,
    agent_index: usize,
    model: &M,
    h: Hypothesis,
    seed: u64,
    trials: u64,
    workers: usize,
) -> Result<Vec<TrialRecord>> {
    run_blocks(trials, workers, |b, len| {
        let mut rng = stream_rng(seed, stream_id(h, agent_index, b));
        (0..len)
            .map(|_| run_trial(agent, model, h, &mut rng))
            .collect()
    })
}

/// `trials` joint trials of a team; entry `t` holds one record per agent.
pub fn simulate_team<M: ObservationModel + Sync>(
    agents: &[HumanAgent],
    model: &M,
    h: Hypothesis,
    seed: u64,
    trials: u64,
    workers: usize,
) -> Result<Vec<Vec<TrialRecord>>> {
    run_blocks(trials, workers, |b, len| {
        let per_agent: Vec<Vec<TrialRecord>> = agents
            .iter()
            .enumerate()
            .map(|(i, agent)| {
                let mut rng = stream_rng(seed, stream_id(h, i, b));
                (0..len)
                    .map(|_| run_trial(agent, model, h, &mut rng))
                    .collect()
            })
            .collect();
        (0..len as usize)
            .map(|t| per_agent.iter().map(|recs| recs[t]).collect())
            .collect()
    })
}
