//! Event generator for classically correlated photon pairs.
//!
//! Work is split into fixed-size chunks, each with its own [`RngStream`]
//! keyed by the chunk index. Chunks run on a rayon pool and are handed to the
//! sink in index order, so the output depends on the configuration only and
//! not on the number of workers.

mod config;
mod sampler;
mod source;
mod transport;

use std::io;

use rayon::prelude::*;

pub use config::{GeometryConfig, Mode, PrescatterArm, SourceConfig, Window, DEFAULT_ACCEPT_HALFWIDTH_DEG};
pub use sampler::{ComptonSampler, SamplerStats, FULL_SPHERE};
pub use source::{generate_pair, PairSample, RngStream};
pub use transport::Transport;

use crate::error::{Error, Result};
use crate::events::EventRecord;

/// Pairs per chunk. Part of the output contract: changing it changes every
/// generated file.
pub const CHUNK_PAIRS: u64 = 4096;

/// Chunks dispatched per worker between two sink flushes.
const CHUNKS_PER_WORKER: u64 = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimulationSummary {
    pub pairs: u64,
    pub lost: u64,
    pub sampler: SamplerStats,
}

impl SimulationSummary {
    pub fn accepted(&self) -> u64 {
        self.pairs - self.lost
    }
}

/// Transport in 4π ideal geometry with exact energies.
pub fn transport_ideal<R: rand::Rng + ?Sized>(
    pair: &PairSample,
    cfg: &GeometryConfig,
    rng: &mut R,
) -> EventRecord {
    let cfg = GeometryConfig { mode: Mode::Ideal, ..cfg.clone() };
    Transport::new(&cfg).transport(pair, 0, rng, &mut SamplerStats::default())
}

/// Transport through finite counters with detector resolution.
pub fn transport_realistic<R: rand::Rng + ?Sized>(
    pair: &PairSample,
    cfg: &GeometryConfig,
    rng: &mut R,
) -> EventRecord {
    let cfg = GeometryConfig { mode: Mode::Realistic, ..cfg.clone() };
    Transport::new(&cfg).transport(pair, 0, rng, &mut SamplerStats::default())
}

fn simulate_chunk(
    src: &SourceConfig,
    transport: &Transport,
    chunk: u64,
) -> (Vec<EventRecord>, SamplerStats) {
    let start = chunk * CHUNK_PAIRS;
    let end = (start + CHUNK_PAIRS).min(src.pairs);
    let mut rng = RngStream::new(src.seed, chunk).rng();
    let mut stats = SamplerStats::default();
    let records = (start..end)
        .map(|id| {
            let pair = generate_pair(src, &mut rng);
            transport.transport(&pair, id, &mut rng, &mut stats)
        })
        .collect();
    (records, stats)
}

/// Generates `src.pairs` events and passes them to `sink` in `event_id` order.
///
/// Lost events are included (flagged); the sink decides whether to keep them.
/// A sink failure aborts the run and reports how many events were delivered.
pub fn run_simulation<F>(
    src: &SourceConfig,
    geom: &GeometryConfig,
    workers: usize,
    mut sink: F,
) -> Result<SimulationSummary>
where
    F: FnMut(&EventRecord) -> io::Result<()>,
{
    src.validate()?;
    geom.validate()?;
    if workers == 0 {
        return Err(Error::config("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let transport = Transport::new(geom);
    let chunks = src.pairs.div_ceil(CHUNK_PAIRS);
    let batch = CHUNKS_PER_WORKER * workers as u64;
    let mut summary = SimulationSummary::default();
    let mut delivered = 0u64;
    let mut first = 0;
    while first < chunks {
        let last = (first + batch).min(chunks);
        let results: Vec<_> = pool.install(|| {
            (first..last)
                .into_par_iter()
                .map(|c| simulate_chunk(src, &transport, c))
                .collect()
        });
        for (records, stats) in results {
            summary.sampler.merge(stats);
            for rec in &records {
                summary.pairs += 1;
                summary.lost += rec.lost as u64;
                sink(rec).map_err(|source| Error::Output { completed: delivered, source })?;
                delivered += 1;
            }
        }
        first = last;
    }
    log::info!(
        "simulated {} pairs, {} lost, sampler acceptance {:.3}",
        summary.pairs,
        summary.lost,
        summary.sampler.acceptance()
    );
    Ok(summary)
}

/// Convenience wrapper collecting all events in memory.
pub fn simulate(src: &SourceConfig, geom: &GeometryConfig, workers: usize) -> Result<Vec<EventRecord>> {
    let mut out = Vec::with_capacity(src.pairs.min(1 << 24) as usize);
    run_simulation(src, geom, workers, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}
