//! Sampler microbenchmarks over a fixed element budget.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::graph::{lognormal, GraphError};
use crate::rng::combine;
use crate::samplers::{LaneGroup, SampleError, SamplerKind, SamplerKit};

/// Weight-pool size bound; tasks cycle through the pool.
const POOL_ELEMENTS: usize = 1 << 18;

/// Weight generator for benchmark vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BenchWeights {
    /// Uniform over `[0, 1)`.
    Uniform,
    /// `exp(N(0, sigma^2))`.
    LogNormal { sigma: f64 },
}

impl BenchWeights {
    pub fn sigma(&self) -> Option<f64> {
        match *self {
            BenchWeights::Uniform => None,
            BenchWeights::LogNormal { sigma } => Some(sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub samplers: Vec<SamplerKind>,
    pub ks: Vec<usize>,
    pub sizes: Vec<usize>,
    pub weights: Vec<BenchWeights>,
    /// Elements sampled per cell; each cell runs `max(1, budget / n)` tasks.
    pub element_budget: u64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            samplers: vec![SamplerKind::Zprs, SamplerKind::Dprs],
            ks: vec![32, 256],
            sizes: (6..=20).map(|e| 1 << e).collect(),
            weights: vec![BenchWeights::Uniform],
            element_budget: 1 << 24,
            seed: 0,
        }
    }
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub sampler: String,
    pub k: usize,
    pub n: usize,
    /// Empty for uniform weights.
    pub sigma: Option<f64>,
    pub trials: u64,
    pub elapsed_ns: u64,
    pub ns_per_element: f64,
    pub collectives: u64,
    pub collectives_per_task: f64,
    pub collectives_min: u64,
    pub collectives_max: u64,
    pub rounds_per_task: f64,
}

/// Weight vectors covering at least `n` and at most `max(n, POOL_ELEMENTS)`
/// elements, all of length `n`.
pub fn weight_pool(n: usize, vectors: usize, weights: BenchWeights, seed: u64) -> Result<Vec<Vec<f64>>, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = vectors.clamp(1, (POOL_ELEMENTS / n.max(1)).max(1));
    let make = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>, GraphError> {
        Ok(match weights {
            BenchWeights::Uniform => {
                let d = rand_distr::Uniform::new(0.0, 1.0).expect("valid range");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            BenchWeights::LogNormal { sigma } => {
                let d = lognormal(0.0, sigma)?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
        })
    };
    (0..count).map(|_| make(&mut rng)).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Weights(#[from] GraphError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Runs `max(1, budget / n)` tasks of size `n` and times them.
pub fn bench_cell(
    kind: SamplerKind,
    k: usize,
    n: usize,
    weights: BenchWeights,
    element_budget: u64,
    seed: u64,
) -> Result<BenchRow, BenchError> {
    let tasks = (element_budget / n.max(1) as u64).max(1);
    let pool = weight_pool(n, tasks as usize, weights, combine(seed, n as u64))?;
    let mut kit = SamplerKit::new(kind, LaneGroup::new(k, seed, combine(k as u64, n as u64)));
    // Warm-up grows every scratch buffer before timing.
    for w in pool.iter().take(4) {
        kit.sample(&w[..])?;
    }
    let (mut collectives, mut cmin, mut cmax, mut rounds) = (0u64, u64::MAX, 0u64, 0u64);
    let mut sink = 0usize;
    let began = Instant::now();
    for t in 0..tasks {
        let w = &pool[t as usize % pool.len()];
        let (s, cost) = kit.sample(&w[..])?;
        sink = sink.wrapping_add(s.index());
        collectives += cost.collectives;
        cmin = cmin.min(cost.collectives);
        cmax = cmax.max(cost.collectives);
        rounds += cost.rounds;
    }
    let elapsed_ns = began.elapsed().as_nanos() as u64;
    std::hint::black_box(sink);
    let elements = tasks * n as u64;
    Ok(BenchRow {
        sampler: kind.name().to_string(),
        k,
        n,
        sigma: weights.sigma(),
        trials: tasks,
        elapsed_ns,
        ns_per_element: elapsed_ns as f64 / elements.max(1) as f64,
        collectives,
        collectives_per_task: collectives as f64 / tasks as f64,
        collectives_min: cmin,
        collectives_max: cmax,
        rounds_per_task: rounds as f64 / tasks as f64,
    })
}

/// Every (weights, sampler, k, n) cell in that nesting order.
pub fn bench_grid(cfg: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    for &weights in &cfg.weights {
        for &kind in &cfg.samplers {
            for &k in &cfg.ks {
                for &n in &cfg.sizes {
                    rows.push(bench_cell(kind, k, n, weights, cfg.element_budget, cfg.seed)?);
                }
            }
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
