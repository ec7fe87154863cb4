//! Baseline samplers: inverse transform, alias table and rejection sampling.

use super::{checked_weight, uniform_index, SampleError, Selection, WeightOracle};
use crate::rng::UniformSource;

/// Scratch for inverse transform sampling: one prefix sum per element.
#[derive(Debug, Clone, Default)]
pub struct PrefixBuffer {
    sums: Vec<f64>,
}

impl PrefixBuffer {
    pub fn with_capacity(capacity: usize) -> Self {
        PrefixBuffer {
            sums: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.sums.capacity()
    }

    /// Grows the buffer so it can hold `n` sums.
    pub fn reserve(&mut self, n: usize) {
        self.sums.clear();
        self.sums.reserve(n);
    }

    pub fn capacity_bytes(&self) -> usize {
        self.sums.capacity() * 8
    }
}

/// Inverse transform sampling: materializes the inclusive prefix sums, draws
/// one target in `[0, total)` and binary-searches the first sum above it.
pub fn its<O, R>(oracle: &O, rng: &mut R, scratch: &mut PrefixBuffer) -> Result<Selection, SampleError>
where
    O: WeightOracle + ?Sized,
    R: UniformSource + ?Sized,
{
    let n = oracle.len();
    if scratch.sums.capacity() < n {
        return Err(SampleError::InsufficientScratch {
            needed: n,
            capacity: scratch.sums.capacity(),
        });
    }
    scratch.sums.clear();
    let mut total = 0.0;
    for i in 0..n {
        total += checked_weight(oracle, i)?;
        scratch.sums.push(total);
    }
    if total == 0.0 {
        return Ok(Selection::NONE);
    }
    let target = rng.next_uniform() * total;
    // Strictly above the target, so zero-weight elements (whose sum equals
    // their predecessor's) are never hit.
    let pos = scratch.sums.partition_point(|&s| s <= target);
    Ok(Selection::from_position(pos.min(n - 1)))
}

/// Two-array alias table (acceptance probability and alias per bucket).
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
    small: Vec<u32>,
    large: Vec<u32>,
}

impl AliasTable {
    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn probability(&self, bucket: usize) -> f64 {
        self.prob[bucket]
    }

    pub fn alias(&self, bucket: usize) -> usize {
        self.alias[bucket] as usize
    }

    /// Vose's construction into the existing buffers.
    pub fn rebuild<O: WeightOracle + ?Sized>(&mut self, oracle: &O) -> Result<(), SampleError> {
        let n = oracle.len();
        self.prob.clear();
        self.alias.clear();
        self.small.clear();
        self.large.clear();
        let mut total = 0.0;
        for i in 0..n {
            let w = checked_weight(oracle, i)?;
            total += w;
            self.prob.push(w);
        }
        if total == 0.0 {
            self.prob.clear();
            return Err(SampleError::ZeroTotalWeight);
        }
        let scale = n as f64 / total;
        for (i, p) in self.prob.iter_mut().enumerate() {
            *p *= scale;
            if *p < 1.0 {
                self.small.push(i as u32);
            } else {
                self.large.push(i as u32);
            }
        }
        self.alias.extend(0..n as u32);
        let mut last_large = *self.large.last().expect("positive mass implies a large bucket");
        while let (Some(&s), Some(&l)) = (self.small.last(), self.large.last()) {
            self.small.pop();
            self.alias[s as usize] = l;
            let rest = self.prob[l as usize] + self.prob[s as usize] - 1.0;
            self.prob[l as usize] = rest;
            last_large = l;
            if rest < 1.0 {
                self.large.pop();
                self.small.push(l);
            }
        }
        for &l in &self.large {
            self.prob[l as usize] = 1.0;
        }
        // Rounding leftovers: keep zero-mass buckets pointing elsewhere.
        for &s in &self.small {
            let s = s as usize;
            if self.prob[s] > 0.0 || s == last_large as usize {
                self.prob[s] = 1.0;
            } else {
                self.alias[s] = last_large;
            }
        }
        Ok(())
    }

    pub fn capacity_bytes(&self) -> usize {
        self.prob.capacity() * 8 + (self.alias.capacity() + self.small.capacity() + self.large.capacity()) * 4
    }
}

pub fn alias_build<O: WeightOracle + ?Sized>(oracle: &O) -> Result<AliasTable, SampleError> {
    let mut t = AliasTable::default();
    t.rebuild(oracle)?;
    Ok(t)
}

/// One uniform picks the bucket, a second one the coin.
pub fn alias_sample<R: UniformSource + ?Sized>(table: &AliasTable, rng: &mut R) -> Selection {
    if table.is_empty() {
        return Selection::NONE;
    }
    let bucket = uniform_index(rng, table.len());
    let coin = rng.next_uniform();
    let pos = if coin < table.prob[bucket] {
        bucket
    } else {
        table.alias[bucket] as usize
    };
    Selection::from_position(pos)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RjsOutcome {
    Accepted { selection: Selection, rounds: u32 },
    /// Nothing to sample (empty or zero bound).
    Empty,
    /// Gave up after the round limit.
    Exhausted { rounds: u32 },
}

impl RjsOutcome {
    pub fn selection(self) -> Selection {
        match self {
            RjsOutcome::Accepted { selection, .. } => selection,
            _ => Selection::NONE,
        }
    }

    pub fn rounds(self) -> u32 {
        match self {
            RjsOutcome::Accepted { rounds, .. } | RjsOutcome::Exhausted { rounds } => rounds,
            RjsOutcome::Empty => 0,
        }
    }
}

/// Rejection sampling against a known upper bound `w_max`: pick a uniform
/// position, draw `p` in `[0, w_max)`, accept if `p < w(position)`.
pub fn rjs<O, R>(oracle: &O, w_max: f64, rng: &mut R, max_rounds: u32) -> Result<RjsOutcome, SampleError>
where
    O: WeightOracle + ?Sized,
    R: UniformSource + ?Sized,
{
    if max_rounds == 0 {
        return Err(SampleError::NoRounds);
    }
    let n = oracle.len();
    if n == 0 || w_max <= 0.0 {
        return Ok(RjsOutcome::Empty);
    }
    for round in 1..=max_rounds {
        let pos = uniform_index(rng, n);
        let p = rng.next_uniform() * w_max;
        let w = checked_weight(oracle, pos)?;
        if w > w_max {
            return Err(SampleError::WeightAboveBound {
                position: pos,
                weight: w,
                bound: w_max,
            });
        }
        if p < w {
            return Ok(RjsOutcome::Accepted {
                selection: Selection::from_position(pos),
                rounds: round,
            });
        }
    }
    Ok(RjsOutcome::Exhausted { rounds: max_rounds })
}

/// Rejection sampling with its initialization pass: scan for the maximum
/// weight first, then run the trial loop.
pub fn rjs_scan<O, R>(oracle: &O, rng: &mut R, max_rounds: u32) -> Result<RjsOutcome, SampleError>
where
    O: WeightOracle + ?Sized,
    R: UniformSource + ?Sized,
{
    let mut w_max = 0.0f64;
    for i in 0..oracle.len() {
        w_max = w_max.max(checked_weight(oracle, i)?);
    }
    rjs(oracle, w_max, rng, max_rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{FixedDraws, RngStream};

    fn tvd_vs(counts: &[u64], w: &[f64]) -> f64 {
        let trials: u64 = counts.iter().sum();
        let total: f64 = w.iter().sum();
        let mut d = counts[0] as f64 / trials as f64;
        for (i, &wi) in w.iter().enumerate() {
            d += (counts[i + 1] as f64 / trials as f64 - wi / total).abs();
        }
        d / 2.0
    }

    #[test]
    fn its_binary_search_example() {
        let mut scratch = PrefixBuffer::with_capacity(4);
        let mut draws = FixedDraws::new(&[0.30]);
        let s = its(&[1.0, 1.0, 1.0, 1.0][..], &mut draws, &mut scratch).unwrap();
        assert_eq!(s.index(), 2);
    }

    #[test]
    fn its_needs_scratch() {
        let mut scratch = PrefixBuffer::with_capacity(2);
        let mut rng = RngStream::new(0, 0);
        assert_eq!(
            its(&[1.0, 1.0, 1.0][..], &mut rng, &mut scratch),
            Err(SampleError::InsufficientScratch { needed: 3, capacity: scratch.capacity() })
        );
    }

    #[test]
    fn its_never_hits_zero_mass() {
        let mut scratch = PrefixBuffer::with_capacity(3);
        let mut rng = RngStream::new(3, 3);
        for _ in 0..1_000_000 {
            assert_ne!(its(&[2.0, 0.0, 2.0][..], &mut rng, &mut scratch).unwrap().index(), 2);
        }
        let mut zero = FixedDraws::new(&[0.0]);
        assert_eq!(its(&[0.0, 1.0][..], &mut zero, &mut scratch).unwrap().index(), 2);
    }

    #[test]
    fn its_distribution() {
        let w = [1.0, 2.0, 3.0];
        let mut scratch = PrefixBuffer::with_capacity(3);
        let mut rng = RngStream::new(4, 4);
        let mut counts = [0u64; 4];
        for _ in 0..1_000_000 {
            counts[its(&w[..], &mut rng, &mut scratch).unwrap().index()] += 1;
        }
        assert!(tvd_vs(&counts, &w) <= 0.005);
    }

    #[test]
    fn alias_uniform_pair_needs_no_alias() {
        let t = alias_build(&[1.0, 1.0][..]).unwrap();
        assert_eq!(t.probability(0), 1.0);
        assert_eq!(t.probability(1), 1.0);
        assert_eq!((t.alias(0), t.alias(1)), (0, 1));
    }

    #[test]
    fn alias_zero_mass_is_an_error() {
        assert_eq!(alias_build(&[0.0, 0.0][..]).unwrap_err(), SampleError::ZeroTotalWeight);
    }

    #[test]
    fn alias_distribution() {
        let w = [3.0, 1.0];
        let t = alias_build(&w[..]).unwrap();
        let mut rng = RngStream::new(5, 5);
        let mut counts = [0u64; 3];
        for _ in 0..1_000_000 {
            counts[alias_sample(&t, &mut rng).index()] += 1;
        }
        assert!(tvd_vs(&counts, &w) <= 0.005);
    }

    #[test]
    fn alias_table_mass_is_exact_for_awkward_weights() {
        // Each bucket contributes prob/n to itself and (1-prob)/n to its alias.
        let w = [0.1, 0.0, 7.3, 2.2, 0.0, 1e-9, 4.4];
        let t = alias_build(&w[..]).unwrap();
        let n = w.len() as f64;
        let mut mass = vec![0.0; w.len()];
        for b in 0..w.len() {
            mass[b] += t.probability(b) / n;
            mass[t.alias(b)] += (1.0 - t.probability(b)) / n;
        }
        let total: f64 = w.iter().sum();
        for (m, wi) in mass.iter().zip(w) {
            assert!((m - wi / total).abs() < 1e-12);
        }
    }

    #[test]
    fn rjs_uniform_accepts_first_round() {
        let mut rng = RngStream::new(6, 6);
        for _ in 0..1000 {
            let out = rjs(&[2.0, 2.0, 2.0][..], 2.0, &mut rng, 10).unwrap();
            assert_eq!(out.rounds(), 1);
        }
    }

    #[test]
    fn rjs_expected_rounds() {
        // E[rounds] = n * w_max / sum = 4 * 9 / 12.
        let w = [1.0, 1.0, 1.0, 9.0];
        let mut rng = RngStream::new(7, 7);
        let mut rounds = 0u64;
        let trials = 1_000_000;
        for _ in 0..trials {
            rounds += rjs(&w[..], 9.0, &mut rng, 10_000).unwrap().rounds() as u64;
        }
        let mean = rounds as f64 / trials as f64;
        assert!((mean - 3.0).abs() < 0.15, "mean rounds {mean}");
    }

    #[test]
    fn rjs_distribution() {
        let w = [1.0, 2.0, 3.0];
        let mut rng = RngStream::new(8, 8);
        let mut counts = [0u64; 4];
        let mut accepted = 0;
        while accepted < 1_000_000 {
            if let RjsOutcome::Accepted { selection, .. } = rjs(&w[..], 3.0, &mut rng, 10_000).unwrap() {
                counts[selection.index()] += 1;
                accepted += 1;
            }
        }
        assert!(tvd_vs(&counts, &w) <= 0.005);
    }

    #[test]
    fn rjs_detects_bound_violation_and_exhaustion() {
        let mut rng = RngStream::new(9, 9);
        assert!(matches!(
            rjs(&[5.0][..], 1.0, &mut rng, 10),
            Err(SampleError::WeightAboveBound { .. })
        ));
        assert_eq!(
            rjs(&[0.0, 0.0][..], 1.0, &mut rng, 7).unwrap(),
            RjsOutcome::Exhausted { rounds: 7 }
        );
        assert_eq!(rjs(&[1.0][..], 1.0, &mut rng, 0), Err(SampleError::NoRounds));
    }
}
