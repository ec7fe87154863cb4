use crate::apps::{is_complete, ppr_step, transition_oracle, App, AppConfig, PprDecision, WalkQuery};
use crate::graph::Graph;
use crate::rng::{combine, RngStream};
use crate::samplers::{LaneGroup, SampleError, SamplerKit};

use super::pool::GlobalPool;
use super::result::ResultPool;
use super::EngineConfig;

// Stream-id tags; lane ids stay far below these.
const LARGE_UNIT: u64 = u64::MAX;
const CONTROL_STREAM: u64 = u64::MAX - 1;
const PPR_STREAM: u64 = u64::MAX;

/// Counters a worker accumulates over a whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkerStats {
    pub completed: u64,
    /// Transitions taken; sampling calls that found no candidate are not counted.
    pub steps: u64,
    pub edges: u64,
    pub collectives: u64,
    pub small_tasks: u64,
    pub large_tasks: u64,
    pub rejection_rounds: u64,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    query: WalkQuery,
    done: bool,
    /// Routed to a small unit in the current pass.
    small: bool,
    owner: usize,
}

/// One worker: a local pool of in-flight queries, `k_b / k_s` small lane
/// groups and one large lane group.
#[derive(Debug)]
pub struct Worker<'a> {
    id: usize,
    graph: &'a Graph,
    app: &'a AppConfig,
    cfg: &'a EngineConfig,
    local: Vec<Slot>,
    small: Vec<SamplerKit>,
    large: SamplerKit,
    control: RngStream,
    pub stats: WorkerStats,
}

impl<'a> Worker<'a> {
    pub fn new(id: usize, graph: &'a Graph, app: &'a AppConfig, cfg: &'a EngineConfig) -> Self {
        let units = (cfg.k_b / cfg.k_s).max(1);
        let small = (0..units)
            .map(|u| {
                let lanes = LaneGroup::new(cfg.k_s, cfg.seed, combine(id as u64, u as u64));
                SamplerKit::new(cfg.sampler, lanes)
            })
            .collect();
        let large = SamplerKit::new(
            cfg.sampler,
            LaneGroup::new(cfg.k_b, cfg.seed, combine(id as u64, LARGE_UNIT)),
        );
        Worker {
            id,
            graph,
            app,
            cfg,
            local: Vec::with_capacity(cfg.local_pool),
            small,
            large,
            control: RngStream::new(cfg.seed, combine(id as u64, CONTROL_STREAM)),
            stats: WorkerStats::default(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn small_units(&self) -> usize {
        self.small.len()
    }

    /// Queries currently held.
    pub fn in_flight(&self) -> usize {
        self.local.len()
    }

    /// Degree of the current vertex of every in-flight query, in slot order.
    pub fn local_degrees(&self) -> Vec<usize> {
        self.local.iter().map(|s| self.graph.degree(s.query.cur)).collect()
    }

    /// Bytes of engine-owned scratch: the local pool plus every lane group and
    /// sampler buffer.
    pub fn aux_bytes(&self) -> usize {
        self.local.capacity() * std::mem::size_of::<Slot>()
            + self.small.iter().map(SamplerKit::scratch_bytes).sum::<usize>()
            + self.large.scratch_bytes()
    }

    /// Processes the batch until the global pool is empty and the local pool
    /// has drained.
    pub fn run_batch(&mut self, pool: &GlobalPool<'_>, results: &ResultPool) -> Result<(), SampleError> {
        self.refill(pool, results);
        while !self.local.is_empty() {
            self.step_block(pool, results)?;
        }
        Ok(())
    }

    /// One pass over the local pool: every query with `degree <= d_t` takes a
    /// step on a small unit (assigned round-robin in slot order), then every
    /// remaining query takes a step on the large unit. Finished queries are
    /// retired and replaced afterwards.
    pub fn step_block(&mut self, pool: &GlobalPool<'_>, results: &ResultPool) -> Result<(), SampleError> {
        let d_t = self.cfg.d_t;
        for slot in &mut self.local {
            slot.small = self.graph.degree(slot.query.cur) <= d_t;
        }
        let mut unit = 0;
        for i in 0..self.local.len() {
            if !self.local[i].small {
                continue;
            }
            let units = self.small.len();
            let kit = &mut self.small[unit % units];
            unit += 1;
            self.stats.small_tasks += 1;
            advance(
                self.graph,
                self.app,
                self.cfg,
                self.id,
                &mut self.local[i],
                kit,
                &mut self.control,
                &mut self.stats,
                results,
            )?;
        }
        for i in 0..self.local.len() {
            if self.local[i].small {
                continue;
            }
            debug_assert!(self.graph.degree(self.local[i].query.cur) > d_t);
            self.stats.large_tasks += 1;
            advance(
                self.graph,
                self.app,
                self.cfg,
                self.id,
                &mut self.local[i],
                &mut self.large,
                &mut self.control,
                &mut self.stats,
                results,
            )?;
        }
        self.retire(results);
        self.refill(pool, results);
        Ok(())
    }

    fn retire(&mut self, results: &ResultPool) {
        let max_len = self.cfg_max_len();
        let mut completed = 0;
        self.local.retain(|s| {
            if s.done {
                results.complete(s.query.result_base / max_len, s.query.emitted);
                completed += 1;
            }
            !s.done
        });
        self.stats.completed += completed;
    }

    fn refill(&mut self, pool: &GlobalPool<'_>, results: &ResultPool) {
        let max_len = self.cfg_max_len();
        loop {
            let want = self.cfg.local_pool - self.local.len();
            if want == 0 {
                return;
            }
            let fetched = pool.fetch(want);
            if fetched.len() == 0 {
                return;
            }
            let first = pool.first_id();
            for (query_id, start) in fetched {
                let pos = (query_id - first) as usize;
                let base = pos * max_len;
                results.write(base, start);
                let query = WalkQuery::start(query_id, start, base);
                if is_complete(&query, self.app) {
                    results.complete(pos, query.emitted);
                    self.stats.completed += 1;
                } else {
                    self.local.push(Slot {
                        query,
                        done: false,
                        small: false,
                        owner: self.id,
                    });
                }
            }
        }
    }

    fn cfg_max_len(&self) -> usize {
        self.app.max_len
    }
}

#[allow(clippy::too_many_arguments)]
fn advance(
    graph: &Graph,
    app: &AppConfig,
    cfg: &EngineConfig,
    worker: usize,
    slot: &mut Slot,
    kit: &mut SamplerKit,
    control: &mut RngStream,
    stats: &mut WorkerStats,
    results: &ResultPool,
) -> Result<(), SampleError> {
    debug_assert_eq!(slot.owner, worker, "query migrated between workers");
    let q = &mut slot.query;
    let step = q.emitted as u64;
    let replay_base = combine(q.query_id, step);
    if let App::Ppr { stop_prob } = app.app {
        let decision = if cfg.replay {
            ppr_step(stop_prob, &mut RngStream::new(cfg.seed, combine(replay_base, PPR_STREAM)))
        } else {
            ppr_step(stop_prob, control)
        };
        if decision == PprDecision::Stop {
            slot.done = true;
            return Ok(());
        }
    }
    if cfg.replay {
        kit.lanes.reseed(replay_base);
    }
    let oracle = transition_oracle(graph, q, app);
    let (selection, cost) = kit.sample(&oracle)?;
    stats.edges += cost.evaluations;
    stats.collectives += cost.collectives;
    stats.rejection_rounds += cost.rounds;
    match selection.position() {
        None => slot.done = true,
        Some(p) => {
            let next = graph.neighbors(q.cur)[p];
            results.write(q.result_base + q.emitted as usize, next);
            q.advance(next);
            stats.steps += 1;
            slot.done = is_complete(q, app);
        }
    }
    Ok(())
}
