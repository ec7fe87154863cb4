//! Weighted reservoir sampling: the one-pass sequential form and its two
//! lane-parallel forms.

use super::{checked_weight, LaneGroup, SampleError, Selection, WeightOracle};
use crate::rng::UniformSource;

/// One pass, one draw per element: element `i` replaces the current pick with
/// probability `w(i) / (w(1) + ... + w(i))`.
pub fn sequential_rs<O, R>(oracle: &O, rng: &mut R) -> Result<Selection, SampleError>
where
    O: WeightOracle + ?Sized,
    R: UniformSource + ?Sized,
{
    let mut total = 0.0;
    let mut selected = 0;
    for i in 0..oracle.len() {
        let w = checked_weight(oracle, i)?;
        total += w;
        let r = rng.next_uniform();
        if w > 0.0 && r < w / total {
            selected = i + 1;
        }
    }
    Ok(Selection::from_index(selected))
}

/// Direct parallel reservoir sampling.
///
/// The sequence is consumed in chunks of `k` consecutive elements. Per chunk
/// the lanes scan their weights, lane `j` accepts its element with probability
/// `w / (prefix[j] + carried)`, and a max reduction keeps the latest accepted
/// index. Two collectives per chunk; every lane draws once per chunk, padding
/// lanes included.
pub fn dprs<O>(oracle: &O, g: &mut LaneGroup) -> Result<Selection, SampleError>
where
    O: WeightOracle + ?Sized,
{
    let n = oracle.len();
    let k = g.k();
    g.clear_registers();
    let mut selected = 0;
    let mut carried = 0.0;
    for chunk in 0..n.div_ceil(k) {
        let first = chunk * k;
        for j in 0..k {
            let idx = first + j;
            g.local[j] = if idx < n {
                checked_weight(oracle, idx)?
            } else {
                0.0
            };
        }
        g.inclusive_prefix_sum();
        for j in 0..k {
            let w = g.local[j];
            // Zero-weight lanes (padding included) cannot accept; they only
            // advance their stream.
            g.cand[j] = if w > 0.0 && g.draw(j) < w / (g.prefix[j] + carried) {
                first + j + 1
            } else {
                if w <= 0.0 {
                    g.skip_draw(j);
                }
                0
            };
        }
        // The reduction consumes `cand`; the running maximum carries over.
        selected = selected.max(g.max_reduce());
        carried += g.prefix[k - 1];
    }
    Ok(Selection::from_index(selected))
}

/// Zig-zag parallel reservoir sampling.
///
/// Lane `j` owns the strided subsequence `j, j + k, j + 2k, ...`. A first pass
/// sums each lane's weights; an exclusive scan over those sums gives every
/// lane the mass of all lower lanes. The second pass re-evaluates the weights
/// and runs a sequential reservoir inside each lane, seeded with that offset,
/// and the final pick is the accepted index of the highest lane that accepted
/// anything. This is exactly sequential sampling over the concatenation of
/// the lane subsequences, with two collectives in total.
pub fn zprs<O>(oracle: &O, g: &mut LaneGroup) -> Result<Selection, SampleError>
where
    O: WeightOracle + ?Sized,
{
    let n = oracle.len();
    let k = g.k();
    let chunks = n.div_ceil(k);
    g.clear_registers();
    for chunk in 0..chunks {
        let first = chunk * k;
        for j in 0..k.min(n - first) {
            g.local[j] += checked_weight(oracle, first + j)?;
        }
    }
    g.exclusive_prefix_sum();
    for chunk in 0..chunks {
        let first = chunk * k;
        for j in 0..k {
            let idx = first + j;
            if idx >= n {
                g.skip_draw(j);
                continue;
            }
            let w = checked_weight(oracle, idx)?;
            g.prefix[j] += w;
            if w > 0.0 {
                if g.draw(j) < w / g.prefix[j] {
                    g.cand[j] = idx + 1;
                }
            } else {
                g.skip_draw(j);
            }
        }
    }
    Ok(Selection::from_index(g.last_positive_reduce()))
}
