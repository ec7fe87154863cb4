//! Sampler-centric walk execution.
//!
//! Workers (OS threads) hold up to `local_pool` in-flight queries each and
//! pull new ones from a shared [`GlobalPool`]. Every pass over a local pool
//! runs in two stages: low-degree steps on the `k_s`-lane units, then
//! high-degree steps one by one on the `k_b`-lane unit. Queries are split into
//! batches whose sequences fit the memory budget, and batch `b` is flushed to
//! the sink while batch `b + 1` computes.

mod pool;
mod result;
mod worker;

use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::apps::{AppConfig, AppError};
use crate::graph::{Graph, VertexId};
use crate::samplers::{SampleError, SamplerKind};

pub use pool::{Fetched, GlobalPool};
pub use result::{
    read_walk_file, validate_output, MemorySink, NullSink, ResultPool, ResultSink, WalkFileWriter,
    WalkOutput, SENTINEL,
};
pub use worker::{Worker, WorkerStats};

/// Result memory assumed when no budget is configured.
pub const DEFAULT_RESULT_MEMORY: u64 = 1 << 30;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error(transparent)]
    App(#[from] AppError),
    #[error("start vertex {vertex} of query {query} is not in the graph ({vertex_count} vertices)")]
    BadStart {
        query: usize,
        vertex: VertexId,
        vertex_count: usize,
    },
    #[error("sampling failed: {0}")]
    Sample(#[from] SampleError),
    #[error("flushing results failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    pub workers: usize,
    /// Lane width of the small units.
    pub k_s: usize,
    /// Lane width of the large unit.
    pub k_b: usize,
    /// In-flight queries per worker.
    pub local_pool: usize,
    /// Highest degree routed to a small unit.
    pub d_t: usize,
    /// Total memory budget in bytes; `None` means graph plus
    /// [`DEFAULT_RESULT_MEMORY`].
    pub memory_budget: Option<u64>,
    /// Graph footprint in bytes; `None` means measured from the graph.
    pub graph_bytes: Option<u64>,
    pub vertex_bytes: u64,
    /// Key random streams on (query, step) instead of (worker, lane), making
    /// results independent of the schedule.
    pub replay: bool,
    pub seed: u64,
    pub sampler: SamplerKind,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: 1,
            k_s: 32,
            k_b: 256,
            local_pool: 64,
            d_t: 1024,
            memory_budget: None,
            graph_bytes: None,
            vertex_bytes: 4,
            replay: false,
            seed: 0,
            sampler: SamplerKind::Zprs,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::Config(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.k_s == 0 {
            return bad("k_s must be at least 1");
        }
        if self.k_s > self.k_b {
            return bad("k_s must not exceed k_b");
        }
        if self.local_pool == 0 {
            return bad("local_pool must be at least 1");
        }
        if self.d_t == 0 {
            return bad("d_t must be at least 1");
        }
        if self.vertex_bytes == 0 {
            return bad("vertex_bytes must be at least 1");
        }
        Ok(())
    }

    /// Batch size for `graph` with sequences of `max_len` entries, resolving
    /// the unset memory fields.
    pub fn batch_size_for(&self, graph: &Graph, max_len: usize) -> Result<usize, EngineError> {
        let graph_bytes = self.graph_bytes.unwrap_or_else(|| graph.memory_bytes());
        let budget = self
            .memory_budget
            .unwrap_or(graph_bytes + DEFAULT_RESULT_MEMORY);
        batch_size(budget, graph_bytes, max_len, self.vertex_bytes)
    }
}

/// `floor((M - M_G) / (2 * (L_max + 1) * M_v))`: queries per batch such that
/// two result buffers of `L_max` vertices plus a length word per query fit in
/// what the graph leaves of the budget.
pub fn batch_size(
    memory_budget: u64,
    graph_bytes: u64,
    max_len: usize,
    vertex_bytes: u64,
) -> Result<usize, EngineError> {
    if memory_budget <= graph_bytes {
        return Err(EngineError::Config(format!(
            "memory budget {memory_budget} does not exceed graph size {graph_bytes}"
        )));
    }
    let per_query = 2 * (max_len as u64 + 1) * vertex_bytes.max(1);
    Ok(((memory_budget - graph_bytes) / per_query) as usize)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub queries: u64,
    pub batches: u64,
    pub batch_size: usize,
    pub completed: u64,
    pub per_worker_completed: Vec<u64>,
    /// Transitions taken, start vertices excluded.
    pub steps: u64,
    /// Weight evaluations over all steps.
    pub edges: u64,
    pub collectives: u64,
    pub small_tasks: u64,
    pub large_tasks: u64,
    pub rejection_rounds: u64,
    /// Engine scratch (local pools and sampler buffers) summed over workers,
    /// at its peak.
    pub aux_bytes: u64,
    pub double_completions: u64,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
}

mod duration_secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Throughput {
    pub edges_per_sec: f64,
    pub steps_per_sec: f64,
    pub collectives: u64,
    pub elapsed_secs: f64,
}

/// Rates over the measured wall time. Durations below one microsecond are
/// clamped to one microsecond.
pub fn throughput_report(stats: &RunStats) -> Throughput {
    let secs = stats.elapsed.max(Duration::from_micros(1)).as_secs_f64();
    Throughput {
        edges_per_sec: stats.edges as f64 / secs,
        steps_per_sec: stats.steps as f64 / secs,
        collectives: stats.collectives,
        elapsed_secs: stats.elapsed.as_secs_f64(),
    }
}

/// Runs one walk per start vertex. Query `i` starts at `starts[i]`; sequences
/// reach `sink` in query order, one batch at a time.
pub fn run<S: ResultSink>(
    graph: &Graph,
    starts: &[VertexId],
    app: &AppConfig,
    cfg: &EngineConfig,
    sink: &mut S,
) -> Result<RunStats, EngineError> {
    cfg.validate()?;
    app.validate()?;
    let vertex_count = graph.vertex_count();
    if let Some((query, &vertex)) = starts
        .iter()
        .enumerate()
        .find(|&(_, &v)| v as usize >= vertex_count)
    {
        return Err(EngineError::BadStart {
            query,
            vertex,
            vertex_count,
        });
    }
    let batch = cfg.batch_size_for(graph, app.max_len)?;
    if batch == 0 {
        return Err(EngineError::Config(format!(
            "memory budget cannot hold one sequence of {} vertices",
            app.max_len
        )));
    }
    let began = Instant::now();
    let mut workers: Vec<Worker> = (0..cfg.workers).map(|id| Worker::new(id, graph, app, cfg)).collect();
    let mut stats = RunStats {
        queries: starts.len() as u64,
        batch_size: batch,
        ..RunStats::default()
    };
    sink.begin(starts.len() as u64, app.max_len as u32)?;

    let flush_sink = &mut *sink;
    let (compute, flush) = std::thread::scope(|s| {
        let (full_tx, full_rx) = mpsc::channel::<ResultPool>();
        let (free_tx, free_rx) = mpsc::channel::<ResultPool>();
        for _ in 0..2 {
            free_tx.send(ResultPool::new(app.max_len)).expect("receiver alive");
        }
        let flusher = s.spawn(move || -> std::io::Result<()> {
            for pool in full_rx {
                flush_sink.write_batch(&pool)?;
                if free_tx.send(pool).is_err() {
                    break;
                }
            }
            Ok(())
        });

        let mut compute = Ok(());
        for (b, chunk) in starts.chunks(batch).enumerate() {
            // A closed channel means the flusher failed; its error wins.
            let Ok(mut results) = free_rx.recv() else { break };
            let first = (b * batch) as u64;
            results.reset(first, chunk.len());
            let global = GlobalPool::new(chunk, first);
            if let Err(e) = run_batch(&mut workers, &global, &results) {
                compute = Err(e);
                break;
            }
            stats.batches += 1;
            stats.double_completions += results.double_completions();
            if full_tx.send(results).is_err() {
                break;
            }
        }
        drop(full_tx);
        (compute, flusher.join().expect("flush thread panicked"))
    });
    flush?;
    compute?;
    sink.finish()?;
    stats.elapsed = began.elapsed();

    for w in &workers {
        stats.per_worker_completed.push(w.stats.completed);
        stats.completed += w.stats.completed;
        stats.steps += w.stats.steps;
        stats.edges += w.stats.edges;
        stats.collectives += w.stats.collectives;
        stats.small_tasks += w.stats.small_tasks;
        stats.large_tasks += w.stats.large_tasks;
        stats.rejection_rounds += w.stats.rejection_rounds;
        stats.aux_bytes += w.aux_bytes() as u64;
    }
    Ok(stats)
}

fn run_batch(workers: &mut [Worker], global: &GlobalPool<'_>, results: &ResultPool) -> Result<(), EngineError> {
    if let [only] = workers {
        return Ok(only.run_batch(global, results)?);
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = workers
            .iter_mut()
            .map(|w| s.spawn(move || w.run_batch(global, results)))
            .collect();
        for h in handles {
            h.join().expect("worker panicked")?;
        }
        Ok(())
    })
}
