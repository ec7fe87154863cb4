//! Walk applications: each one supplies a transition-weight oracle over the
//! neighbors of the current vertex, evaluated afresh at every step, plus its
//! stop rule.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, VertexId};
use crate::rng::UniformSource;
use crate::samplers::{Selection, WeightOracle};

pub const DEFAULT_WALK_LENGTH: usize = 80;
pub const DEFAULT_STOP_PROB: f64 = 0.2;
pub const DEFAULT_RETURN_PARAM: f64 = 2.0;
pub const DEFAULT_INOUT_PARAM: f64 = 0.5;
pub const DEFAULT_SCHEMA: [u8; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AppError {
    #[error("walk length must be at least 1")]
    ZeroLength,
    #[error("stop probability {0} outside [0, 1]")]
    StopProb(f64),
    #[error("node2vec parameters must be positive and finite, got a={a} b={b}")]
    Node2VecParams { a: f64, b: f64 },
    #[error("metapath schema must not be empty")]
    EmptySchema,
    #[error("unknown application {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum App {
    DeepWalk,
    Ppr { stop_prob: f64 },
    Node2Vec { a: f64, b: f64 },
    MetaPath { schema: Vec<u8> },
}

impl App {
    pub fn name(&self) -> &'static str {
        match self {
            App::DeepWalk => "deepwalk",
            App::Ppr { .. } => "ppr",
            App::Node2Vec { .. } => "node2vec",
            App::MetaPath { .. } => "metapath",
        }
    }
}

/// An application plus the walk-length bound. `max_len` counts sequence
/// entries including the start vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppConfig {
    pub app: App,
    pub max_len: usize,
    pub weighted: bool,
}

impl AppConfig {
    pub fn new(app: App, max_len: usize, weighted: bool) -> Result<Self, AppError> {
        let cfg = AppConfig {
            app,
            max_len,
            weighted,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn deepwalk(max_len: usize) -> Result<Self, AppError> {
        Self::new(App::DeepWalk, max_len, true)
    }

    pub fn ppr(max_len: usize, stop_prob: f64) -> Result<Self, AppError> {
        Self::new(App::Ppr { stop_prob }, max_len, true)
    }

    pub fn node2vec(max_len: usize, a: f64, b: f64) -> Result<Self, AppError> {
        Self::new(App::Node2Vec { a, b }, max_len, true)
    }

    pub fn metapath(max_len: usize, schema: Vec<u8>) -> Result<Self, AppError> {
        Self::new(App::MetaPath { schema }, max_len, true)
    }

    pub fn weighted(mut self, weighted: bool) -> Self {
        self.weighted = weighted;
        self
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.max_len == 0 {
            return Err(AppError::ZeroLength);
        }
        match &self.app {
            App::DeepWalk => {}
            App::Ppr { stop_prob } => {
                if !(0.0..=1.0).contains(stop_prob) {
                    return Err(AppError::StopProb(*stop_prob));
                }
            }
            App::Node2Vec { a, b } => {
                let ok = |x: &f64| *x > 0.0 && x.is_finite();
                if !(ok(a) && ok(b)) {
                    return Err(AppError::Node2VecParams { a: *a, b: *b });
                }
            }
            App::MetaPath { schema } => {
                if schema.is_empty() {
                    return Err(AppError::EmptySchema);
                }
            }
        }
        Ok(())
    }

    /// Longest sequence (including the start) this configuration can emit.
    pub fn longest_sequence(&self) -> usize {
        match &self.app {
            App::MetaPath { schema } => self.max_len.min(schema.len() + 1),
            _ => self.max_len,
        }
    }
}

/// In-flight state of one walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkQuery {
    pub query_id: u64,
    pub cur: VertexId,
    pub prev: Option<VertexId>,
    /// Sequence entries written so far, start vertex included.
    pub emitted: u32,
    pub result_base: usize,
}

impl WalkQuery {
    /// A query that has just emitted its start vertex.
    pub fn start(query_id: u64, start: VertexId, result_base: usize) -> Self {
        WalkQuery {
            query_id,
            cur: start,
            prev: None,
            emitted: 1,
            result_base,
        }
    }

    pub fn advance(&mut self, next: VertexId) {
        self.prev = Some(self.cur);
        self.cur = next;
        self.emitted += 1;
    }
}

/// Transition weights over `N(cur)` for one step.
#[derive(Debug, Clone, Copy)]
pub enum TransitionOracle<'g> {
    /// First-order: `w(v, u)` (or 1 when unweighted).
    Edge { weights: Option<&'g [f32]>, len: usize },
    Node2Vec {
        targets: &'g [VertexId],
        weights: Option<&'g [f32]>,
        prev: VertexId,
        prev_neighbors: &'g [VertexId],
        return_weight: f64,
        outward_weight: f64,
    },
    MetaPath {
        labels: Option<&'g [u8]>,
        weights: Option<&'g [f32]>,
        want: u8,
        len: usize,
    },
}

impl TransitionOracle<'_> {
    #[inline]
    fn edge_weight(weights: Option<&[f32]>, i: usize) -> f64 {
        weights.map_or(1.0, |w| w[i] as f64)
    }
}

impl WeightOracle for TransitionOracle<'_> {
    fn len(&self) -> usize {
        match self {
            TransitionOracle::Edge { len, .. } | TransitionOracle::MetaPath { len, .. } => *len,
            TransitionOracle::Node2Vec { targets, .. } => targets.len(),
        }
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        match *self {
            TransitionOracle::Edge { weights, .. } => Self::edge_weight(weights, i),
            TransitionOracle::Node2Vec {
                targets,
                weights,
                prev,
                prev_neighbors,
                return_weight,
                outward_weight,
            } => {
                let u = targets[i];
                let base = if u == prev {
                    return_weight
                } else if prev_neighbors.binary_search(&u).is_ok() {
                    1.0
                } else {
                    outward_weight
                };
                base * Self::edge_weight(weights, i)
            }
            TransitionOracle::MetaPath {
                labels,
                weights,
                want,
                ..
            } => {
                let label = labels.map_or(0, |l| l[i]);
                if label == want {
                    Self::edge_weight(weights, i)
                } else {
                    0.0
                }
            }
        }
    }
}

fn edge_slices(g: &Graph, v: VertexId, weighted: bool) -> (Option<&[f32]>, Option<&[u8]>) {
    let range = g.edge_range(v);
    let weights = if weighted {
        g.weights().map(|w| &w[range.clone()])
    } else {
        None
    };
    (weights, g.labels().map(|l| &l[range]))
}

pub fn deepwalk_oracle<'g>(g: &'g Graph, q: &WalkQuery, weighted: bool) -> TransitionOracle<'g> {
    let (weights, _) = edge_slices(g, q.cur, weighted);
    TransitionOracle::Edge {
        weights,
        len: g.degree(q.cur),
    }
}

/// Second-order weights: `1/a` back to the previous vertex, `1` to its
/// out-neighbors, `1/b` elsewhere. The first step has no previous vertex and
/// falls back to first-order weights.
pub fn node2vec_oracle<'g>(g: &'g Graph, q: &WalkQuery, a: f64, b: f64, weighted: bool) -> TransitionOracle<'g> {
    let Some(prev) = q.prev else {
        return deepwalk_oracle(g, q, weighted);
    };
    let (weights, _) = edge_slices(g, q.cur, weighted);
    TransitionOracle::Node2Vec {
        targets: g.neighbors(q.cur),
        weights,
        prev,
        prev_neighbors: g.neighbors(prev),
        return_weight: 1.0 / a,
        outward_weight: 1.0 / b,
    }
}

/// Only edges labelled `schema[emitted - 1]` carry mass.
pub fn metapath_oracle<'g>(g: &'g Graph, q: &WalkQuery, schema: &[u8], weighted: bool) -> TransitionOracle<'g> {
    let step = q.emitted as usize - 1;
    let (weights, labels) = edge_slices(g, q.cur, weighted);
    TransitionOracle::MetaPath {
        labels,
        weights,
        want: schema[step],
        len: g.degree(q.cur),
    }
}

/// The oracle for the next step of `q`. Callers must not ask for a step past
/// the end of a metapath schema.
pub fn transition_oracle<'g>(g: &'g Graph, q: &WalkQuery, cfg: &AppConfig) -> TransitionOracle<'g> {
    match &cfg.app {
        App::DeepWalk | App::Ppr { .. } => deepwalk_oracle(g, q, cfg.weighted),
        App::Node2Vec { a, b } => node2vec_oracle(g, q, *a, *b, cfg.weighted),
        App::MetaPath { schema } => metapath_oracle(g, q, schema, cfg.weighted),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PprDecision {
    Stop,
    Continue,
}

/// One termination draw; stops when it falls below `stop_prob`.
pub fn ppr_step<R: UniformSource + ?Sized>(stop_prob: f64, rng: &mut R) -> PprDecision {
    if rng.next_uniform() < stop_prob {
        PprDecision::Stop
    } else {
        PprDecision::Continue
    }
}

/// Whether `q` is finished after a step that produced `last`. The PPR stop
/// draw is taken separately by [`ppr_step`] before each transition.
pub fn stop_condition(q: &WalkQuery, cfg: &AppConfig, last: Selection) -> bool {
    last.is_none() || is_complete(q, cfg)
}

/// Whether `q` has reached its length bound (or exhausted its schema).
pub fn is_complete(q: &WalkQuery, cfg: &AppConfig) -> bool {
    q.emitted as usize >= cfg.longest_sequence()
}
