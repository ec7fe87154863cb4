//! Lane groups: `k` logical lanes with explicit collective operations.
//!
//! Lanes execute one after another in lane order, so every collective is a
//! deterministic function of the lane inputs. Collectives are emulated with
//! their parallel formulations (Kogge-Stone scan, pairwise tree reduction),
//! which keeps the work per collective at the `k log k` / `k` of a real lane
//! group.

use crate::rng::{self, RngStream, UniformSource};

/// In-place inclusive scan, Kogge-Stone order: `log2(k)` rounds, each lane
/// adding the value `stride` lanes to its left.
pub fn kogge_stone_inclusive(values: &mut [f64]) {
    let k = values.len();
    let mut stride = 1;
    while stride < k {
        // Descending so every read sees the previous round's value.
        for j in (stride..k).rev() {
            values[j] += values[j - stride];
        }
        stride <<= 1;
    }
}

/// The same scan out of place: each round reads `src` and writes `dst`, then
/// the buffers trade places. Bit-identical to [`kogge_stone_inclusive`]; the
/// result ends up in `values`.
fn kogge_stone_ping_pong(values: &mut Vec<f64>, scratch: &mut Vec<f64>) {
    let k = values.len();
    let mut stride = 1;
    while stride < k {
        scratch[..stride].copy_from_slice(&values[..stride]);
        for (d, (a, b)) in scratch[stride..]
            .iter_mut()
            .zip(values[stride..].iter().zip(&values[..k - stride]))
        {
            *d = a + b;
        }
        std::mem::swap(values, scratch);
        stride <<= 1;
    }
}

fn tree_reduce(values: &mut [usize], op: impl Fn(usize, usize) -> usize) -> usize {
    let k = values.len();
    let mut stride = 1;
    while stride < k {
        let mut j = 0;
        while j + stride < k {
            values[j] = op(values[j], values[j + stride]);
            j += 2 * stride;
        }
        stride <<= 1;
    }
    values.first().copied().unwrap_or(0)
}

/// Maximum over all lanes. Consumes the lane values.
pub fn max_reduce(values: &mut [usize]) -> usize {
    tree_reduce(values, usize::max)
}

/// The value held by the highest-numbered lane whose value is positive, or 0.
/// Consumes the lane values.
pub fn last_positive_reduce(values: &mut [usize]) -> usize {
    tree_reduce(values, |left, right| if right > 0 { right } else { left })
}

/// `k` lanes, each with its own counter-based stream, plus the per-lane
/// registers the reservoir samplers use.
///
/// Lane `j` draws from `RngStream::new(seed, rng::combine(base, j))`. The
/// stream state is kept as a structure of arrays (one base and one counter
/// per lane).
#[derive(Debug, Clone)]
pub struct LaneGroup {
    k: usize,
    seed: u64,
    base: u64,
    lane_bases: Vec<u64>,
    lane_counters: Vec<u64>,
    pub(crate) local: Vec<f64>,
    pub(crate) prefix: Vec<f64>,
    pub(crate) cand: Vec<usize>,
    scratch: Vec<f64>,
    collectives: u64,
}

impl LaneGroup {
    /// Panics if `k` is zero.
    pub fn new(k: usize, seed: u64, base: u64) -> Self {
        assert!(k >= 1, "a lane group needs at least one lane");
        let mut g = LaneGroup {
            k,
            seed,
            base,
            lane_bases: vec![0; k],
            lane_counters: vec![0; k],
            local: vec![0.0; k],
            prefix: vec![0.0; k],
            cand: vec![0; k],
            scratch: vec![0.0; k],
            collectives: 0,
        };
        g.reseed(base);
        g
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    /// Re-keys every lane on a new base id and rewinds the counters.
    pub fn reseed(&mut self, base: u64) {
        self.base = base;
        for (j, (b, c)) in self
            .lane_bases
            .iter_mut()
            .zip(self.lane_counters.iter_mut())
            .enumerate()
        {
            *b = rng::stream_base(self.seed, Self::lane_stream_id(base, j));
            *c = 0;
        }
    }

    pub fn lane_stream_id(base: u64, lane: usize) -> u64 {
        rng::combine(base, lane as u64)
    }

    /// A snapshot of lane `j`'s stream at its current counter.
    pub fn lane_stream(&self, lane: usize) -> RngStream {
        RngStream::at(
            self.seed,
            Self::lane_stream_id(self.base, lane),
            self.lane_counters[lane],
        )
    }

    #[inline]
    pub fn draw(&mut self, lane: usize) -> f64 {
        let c = self.lane_counters[lane];
        self.lane_counters[lane] = c.wrapping_add(1);
        rng::to_unit(rng::value_at(self.lane_bases[lane], c))
    }

    /// Advances lane `j` past one draw without computing it. Padding lanes
    /// use this to stay aligned with their streams.
    #[inline]
    pub(crate) fn skip_draw(&mut self, lane: usize) {
        self.lane_counters[lane] = self.lane_counters[lane].wrapping_add(1);
    }

    /// Lane `j` as a plain uniform source.
    pub fn lane(&mut self, lane: usize) -> LaneDraws<'_> {
        LaneDraws { group: self, lane }
    }

    pub fn draws_consumed(&self, lane: usize) -> u64 {
        self.lane_counters[lane]
    }

    pub fn collectives(&self) -> u64 {
        self.collectives
    }

    pub(crate) fn clear_registers(&mut self) {
        self.local.fill(0.0);
        self.prefix.fill(0.0);
        self.cand.fill(0);
    }

    /// `prefix <- inclusive_scan(local)`.
    pub(crate) fn inclusive_prefix_sum(&mut self) {
        self.collectives += 1;
        self.prefix.copy_from_slice(&self.local);
        kogge_stone_ping_pong(&mut self.prefix, &mut self.scratch);
    }

    /// `prefix <- exclusive_scan(local)`.
    pub(crate) fn exclusive_prefix_sum(&mut self) {
        self.collectives += 1;
        self.prefix.copy_from_slice(&self.local);
        kogge_stone_ping_pong(&mut self.prefix, &mut self.scratch);
        self.prefix.copy_within(0..self.k - 1, 1);
        self.prefix[0] = 0.0;
    }

    pub(crate) fn max_reduce(&mut self) -> usize {
        self.collectives += 1;
        max_reduce(&mut self.cand)
    }

    pub(crate) fn last_positive_reduce(&mut self) -> usize {
        self.collectives += 1;
        last_positive_reduce(&mut self.cand)
    }

    pub fn scratch_bytes(&self) -> usize {
        self.lane_bases.capacity() * 8
            + self.lane_counters.capacity() * 8
            + self.local.capacity() * 8
            + self.prefix.capacity() * 8
            + self.cand.capacity() * std::mem::size_of::<usize>()
            + self.scratch.capacity() * 8
    }
}

/// Borrowed view of one lane's stream.
pub struct LaneDraws<'a> {
    group: &'a mut LaneGroup,
    lane: usize,
}

impl UniformSource for LaneDraws<'_> {
    #[inline]
    fn next_uniform(&mut self) -> f64 {
        self.group.draw(self.lane)
    }
}
