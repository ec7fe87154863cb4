//! Weighted single-item samplers over an indexed weight oracle.
//!
//! Reservoir samplers ([`sequential_rs`], [`dprs`], [`zprs`]) and the rejection
//! sampler keep O(1) state per lane; the inverse-transform and alias baselines
//! need an O(n) scratch buffer.

mod baseline;
mod lanes;
mod reservoir;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use baseline::{alias_build, alias_sample, its, rjs, rjs_scan, AliasTable, PrefixBuffer, RjsOutcome};
pub use lanes::{kogge_stone_inclusive, last_positive_reduce, max_reduce, LaneGroup};
pub use reservoir::{dprs, sequential_rs, zprs};

use crate::rng::UniformSource;

/// Default retry bound for rejection sampling.
pub const DEFAULT_RJS_ROUNDS: u32 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("weight at position {position} is {value}; weights must be finite and non-negative")]
    InvalidWeight { position: usize, value: f64 },
    #[error("scratch buffer holds {capacity} entries but {needed} are required")]
    InsufficientScratch { needed: usize, capacity: usize },
    #[error("total weight is zero")]
    ZeroTotalWeight,
    #[error("weight {weight} at position {position} exceeds the declared bound {bound}")]
    WeightAboveBound { position: usize, weight: f64, bound: f64 },
    #[error("rejection sampling needs at least one round")]
    NoRounds,
}

/// Random access to a sequence of non-negative weights. Positions are 0-based;
/// re-evaluating a position within one sampling call must give the same value.
pub trait WeightOracle {
    fn len(&self) -> usize;

    fn weight(&self, position: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl WeightOracle for [f64] {
    fn len(&self) -> usize {
        <[f64]>::len(self)
    }

    #[inline]
    fn weight(&self, position: usize) -> f64 {
        self[position]
    }
}

impl WeightOracle for [f32] {
    fn len(&self) -> usize {
        <[f32]>::len(self)
    }

    #[inline]
    fn weight(&self, position: usize) -> f64 {
        self[position] as f64
    }
}

impl<T: WeightOracle + ?Sized> WeightOracle for &T {
    fn len(&self) -> usize {
        (**self).len()
    }

    #[inline]
    fn weight(&self, position: usize) -> f64 {
        (**self).weight(position)
    }
}

#[inline]
pub(crate) fn checked_weight<O: WeightOracle + ?Sized>(
    oracle: &O,
    position: usize,
) -> Result<f64, SampleError> {
    let value = oracle.weight(position);
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SampleError::InvalidWeight { position, value })
    }
}

/// Outcome of one sampling task: a 1-based index, or 0 when nothing was
/// selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Selection(usize);

impl Selection {
    pub const NONE: Selection = Selection(0);

    pub fn from_index(index: usize) -> Self {
        Selection(index)
    }

    pub fn from_position(position: usize) -> Self {
        Selection(position + 1)
    }

    /// The 1-based index (0 for none).
    pub fn index(self) -> usize {
        self.0
    }

    /// The 0-based position of the selected element.
    pub fn position(self) -> Option<usize> {
        self.0.checked_sub(1)
    }

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Sequential,
    Dprs,
    Zprs,
    Its,
    Alias,
    Rjs,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 6] = [
        SamplerKind::Sequential,
        SamplerKind::Dprs,
        SamplerKind::Zprs,
        SamplerKind::Its,
        SamplerKind::Alias,
        SamplerKind::Rjs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Sequential => "seq",
            SamplerKind::Dprs => "dprs",
            SamplerKind::Zprs => "zprs",
            SamplerKind::Its => "its",
            SamplerKind::Alias => "alias",
            SamplerKind::Rjs => "rjs",
        }
    }

    /// Whether the lane width changes the algorithm.
    pub fn uses_lanes(self) -> bool {
        matches!(self, SamplerKind::Dprs | SamplerKind::Zprs)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl serde::Serialize for SamplerKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "seq" | "sequential" | "rs" => Ok(SamplerKind::Sequential),
            "dprs" => Ok(SamplerKind::Dprs),
            "zprs" => Ok(SamplerKind::Zprs),
            "its" => Ok(SamplerKind::Its),
            "alias" | "als" => Ok(SamplerKind::Alias),
            "rjs" => Ok(SamplerKind::Rjs),
            other => Err(format!(
                "unknown sampler {other:?} (expected seq, dprs, zprs, its, alias or rjs)"
            )),
        }
    }
}

/// Work done by one sampling task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TaskCost {
    /// Weight evaluations (edges scanned).
    pub evaluations: u64,
    pub collectives: u64,
    /// Rejection rounds, for `rjs` only.
    pub rounds: u64,
}

/// A lane group plus whatever scratch the non-reservoir baselines need, so
/// one call site can drive any [`SamplerKind`].
#[derive(Debug, Clone)]
pub struct SamplerKit {
    pub kind: SamplerKind,
    pub lanes: LaneGroup,
    prefix: PrefixBuffer,
    alias: AliasTable,
    pub rjs_rounds: u32,
}

impl SamplerKit {
    pub fn new(kind: SamplerKind, lanes: LaneGroup) -> Self {
        SamplerKit {
            kind,
            lanes,
            prefix: PrefixBuffer::default(),
            alias: AliasTable::default(),
            rjs_rounds: DEFAULT_RJS_ROUNDS,
        }
    }

    /// Samples once. Lane-free samplers draw from lane 0's stream. An
    /// exhausted rejection sampler reports `Selection::NONE`.
    pub fn sample<O: WeightOracle + ?Sized>(
        &mut self,
        oracle: &O,
    ) -> Result<(Selection, TaskCost), SampleError> {
        let n = oracle.len() as u64;
        let before = self.lanes.collectives();
        let (selection, evaluations, rounds) = match self.kind {
            SamplerKind::Sequential => {
                let s = sequential_rs(oracle, &mut self.lanes.lane(0))?;
                (s, n, 0)
            }
            SamplerKind::Dprs => (dprs(oracle, &mut self.lanes)?, n, 0),
            SamplerKind::Zprs => (zprs(oracle, &mut self.lanes)?, 2 * n, 0),
            SamplerKind::Its => {
                self.prefix.reserve(oracle.len());
                let s = its(oracle, &mut self.lanes.lane(0), &mut self.prefix)?;
                (s, n, 0)
            }
            SamplerKind::Alias => match self.alias.rebuild(oracle) {
                Ok(()) => (alias_sample(&self.alias, &mut self.lanes.lane(0)), n, 0),
                Err(SampleError::ZeroTotalWeight) => (Selection::NONE, n, 0),
                Err(e) => return Err(e),
            },
            SamplerKind::Rjs => {
                let out = rjs_scan(oracle, &mut self.lanes.lane(0), self.rjs_rounds)?;
                let rounds = out.rounds() as u64;
                (out.selection(), n + rounds, rounds)
            }
        };
        Ok((
            selection,
            TaskCost {
                evaluations,
                collectives: self.lanes.collectives() - before,
                rounds,
            },
        ))
    }

    /// Capacity of every buffer this kit owns, in bytes.
    pub fn scratch_bytes(&self) -> usize {
        self.lanes.scratch_bytes() + self.prefix.capacity_bytes() + self.alias.capacity_bytes()
    }
}

/// Draws a uniform integer in `[0, n)` from a uniform source.
#[inline]
pub(crate) fn uniform_index<R: UniformSource + ?Sized>(rng: &mut R, n: usize) -> usize {
    ((rng.next_uniform() * n as f64) as usize).min(n - 1)
}
