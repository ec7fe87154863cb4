//! Distribution oracles and goodness-of-fit measures.
//!
//! Probability vectors are indexed like [`Selection`]: entry 0 is the mass of
//! "nothing selected" and entry `i` that of element `i`.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::graph::{Graph, VertexId};
use crate::samplers::{Selection, WeightOracle};

/// Chi-square acceptance quantile.
pub const CHI_SQUARE_QUANTILE: f64 = 0.999;
/// Bins with fewer expected observations are merged with their neighbours.
pub const MIN_EXPECTED: f64 = 5.0;

pub const MAX_EXHAUSTIVE_LEN: usize = 4;
pub const MAX_EXHAUSTIVE_BITS: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("distributions have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("no trials recorded")]
    NoTrials,
    #[error("exhaustive enumeration limited to n <= {MAX_EXHAUSTIVE_LEN} and bits <= {MAX_EXHAUSTIVE_BITS}, got n = {n}, bits = {bits}")]
    TooLarge { n: usize, bits: u32 },
}

/// Selection counts over repeated trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalDist {
    pub counts: Vec<u64>,
    pub trials: u64,
}

impl EmpiricalDist {
    /// Empty counts for a sequence of `n` elements.
    pub fn new(n: usize) -> Self {
        EmpiricalDist {
            counts: vec![0; n + 1],
            trials: 0,
        }
    }

    pub fn record(&mut self, s: Selection) {
        self.counts[s.index()] += 1;
        self.trials += 1;
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.trials.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

/// `p(i) = w(i) / sum(w)`; all-zero weights put the whole mass on "none".
pub fn analytic_dist<O: WeightOracle + ?Sized>(w: &O) -> Vec<f64> {
    let n = w.len();
    let total: f64 = (0..n).map(|i| w.weight(i)).sum();
    let mut p = vec![0.0; n + 1];
    if total > 0.0 {
        for i in 0..n {
            p[i + 1] = w.weight(i) / total;
        }
    } else {
        p[0] = 1.0;
    }
    p
}

pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64, StatsError> {
    if p.len() != q.len() {
        return Err(StatsError::LengthMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Acceptance bound for an empirical TVD over `outcomes` possible outcomes:
/// `3 * sqrt(outcomes / trials)`, capped at 0.01 once trials reach 10^6.
pub fn tvd_threshold(outcomes: usize, trials: u64) -> f64 {
    let generic = 3.0 * (outcomes as f64 / trials.max(1) as f64).sqrt();
    if trials >= 1_000_000 {
        generic.min(0.01)
    } else {
        generic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    /// Infinite when an outcome with zero expected mass was observed.
    pub statistic: f64,
    pub dof: usize,
}

impl ChiSquare {
    pub fn critical(&self) -> f64 {
        chi_square_critical(self.dof)
    }

    pub fn passes(&self) -> bool {
        self.statistic <= self.critical()
    }
}

/// 99.9th percentile of the chi-square distribution; 0 for zero degrees of
/// freedom.
pub fn chi_square_critical(dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(CHI_SQUARE_QUANTILE)
}

/// Pearson's statistic. Adjacent bins are merged left to right until each
/// group expects at least [`MIN_EXPECTED`] observations; a short final group
/// joins the previous one.
pub fn chi_square(expected: &[f64], observed: &EmpiricalDist) -> Result<ChiSquare, StatsError> {
    if expected.len() != observed.counts.len() {
        return Err(StatsError::LengthMismatch(expected.len(), observed.counts.len()));
    }
    if observed.trials == 0 {
        return Err(StatsError::NoTrials);
    }
    let t = observed.trials as f64;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (&p, &c) in expected.iter().zip(&observed.counts) {
        if p == 0.0 {
            if c > 0 {
                return Ok(ChiSquare {
                    statistic: f64::INFINITY,
                    dof: expected.len().saturating_sub(1),
                });
            }
            continue;
        }
        e += p * t;
        o += c as f64;
        if e >= MIN_EXPECTED {
            groups.push((e, o));
            (e, o) = (0.0, 0.0);
        }
    }
    if e > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += e;
                last.1 += o;
            }
            None => groups.push((e, o)),
        }
    }
    let statistic = groups.iter().map(|&(e, o)| (o - e) * (o - e) / e).sum();
    Ok(ChiSquare {
        statistic,
        dof: groups.len().saturating_sub(1),
    })
}

/// Combined verdict of the two tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub tvd: f64,
    pub tvd_bound: f64,
    pub chi2: f64,
    pub dof: usize,
    pub critical: f64,
    pub pass: bool,
}

impl Fit {
    pub fn tvd_ok(&self) -> bool {
        self.tvd <= self.tvd_bound
    }

    pub fn chi2_ok(&self) -> bool {
        self.chi2 <= self.critical
    }
}

pub fn goodness_of_fit(expected: &[f64], observed: &EmpiricalDist) -> Result<Fit, StatsError> {
    let d = tvd(expected, &observed.probabilities())?;
    let chi = chi_square(expected, observed)?;
    let bound = tvd_threshold(expected.len(), observed.trials);
    let critical = chi.critical();
    Ok(Fit {
        tvd: d,
        tvd_bound: bound,
        chi2: chi.statistic,
        dof: chi.dof,
        critical,
        pass: d <= bound && chi.statistic <= critical,
    })
}

/// Second-order transition distribution from `cur` having arrived from
/// `prev`, by literal membership scans: base `1/a` for `prev` itself, `1` for
/// neighbours of `prev`, `1/b` otherwise, times the edge weight if `weighted`.
pub fn node2vec_bruteforce(
    g: &Graph,
    prev: VertexId,
    cur: VertexId,
    a: f64,
    b: f64,
    weighted: bool,
) -> Vec<f64> {
    let prev_neighbors = g.neighbors(prev);
    let w: Vec<f64> = g
        .edge_range(cur)
        .map(|e| {
            let u = g.targets()[e];
            let base = if u == prev {
                1.0 / a
            } else if prev_neighbors.contains(&u) {
                1.0
            } else {
                1.0 / b
            };
            if weighted {
                base * g.weight(e) as f64
            } else {
                base
            }
        })
        .collect();
    analytic_dist(&w[..])
}

/// Enumerates every draw string at `bits` bits of resolution (draw value
/// `(t + 0.5) / 2^bits`) through the one-pass reservoir rule and returns how
/// many strings end with each selection.
pub fn rs_exhaustive_counts(w: &[f64], bits: u32) -> Result<Vec<u64>, StatsError> {
    let n = w.len();
    if n > MAX_EXHAUSTIVE_LEN || bits > MAX_EXHAUSTIVE_BITS {
        return Err(StatsError::TooLarge { n, bits });
    }
    let levels = 1u64 << bits;
    let strings = levels.pow(n as u32);
    let mut counts = vec![0u64; n + 1];
    for code in 0..strings {
        let mut digits = code;
        let mut total = 0.0;
        let mut chosen = 0;
        for (i, &wi) in w.iter().enumerate() {
            let r = ((digits % levels) as f64 + 0.5) / levels as f64;
            digits /= levels;
            total += wi;
            if wi > 0.0 && r * total < wi {
                chosen = i + 1;
            }
        }
        counts[chosen] += 1;
    }
    Ok(counts)
}

/// The exhaustive counts as probabilities.
pub fn rs_exhaustive_oracle(w: &[f64], bits: u32) -> Result<Vec<f64>, StatsError> {
    let counts = rs_exhaustive_counts(w, bits)?;
    let strings: u64 = counts.iter().sum();
    Ok(counts.iter().map(|&c| c as f64 / strings as f64).collect())
}

/// The draws of string `code` in the order [`rs_exhaustive_counts`] uses.
pub fn exhaustive_draws(code: u64, n: usize, bits: u32) -> Vec<f64> {
    let levels = 1u64 << bits;
    let mut digits = code;
    (0..n)
        .map(|_| {
            let r = ((digits % levels) as f64 + 0.5) / levels as f64;
            digits /= levels;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, parse_edge_list};
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn analytic_examples() {
        assert!(close(&analytic_dist(&[1.0, 1.0][..]), &[0.0, 0.5, 0.5]));
        assert!(close(&analytic_dist(&[0.0, 0.0][..]), &[1.0, 0.0, 0.0]));
        assert!(close(&analytic_dist(&[1.0, 2.0, 3.0][..]), &[0.0, 1.0 / 6.0, 2.0 / 6.0, 0.5]));
    }

    #[test]
    fn tvd_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(tvd(&p, &p).unwrap(), 0.0);
        assert_eq!(tvd(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tvd(&[0.5, 0.5], &[0.75, 0.25]).unwrap(), 0.25);
        assert_eq!(tvd(&[1.0], &[0.5, 0.5]), Err(StatsError::LengthMismatch(1, 2)));
    }

    #[test]
    fn tvd_bound_caps_at_large_trials() {
        assert_eq!(tvd_threshold(65, 1_000_000), 0.01);
        assert!((tvd_threshold(4, 10_000) - 0.06).abs() < 1e-12);
    }

    #[test]
    fn chi_square_examples() {
        let obs = EmpiricalDist {
            counts: vec![30, 20, 25, 25],
            trials: 100,
        };
        let chi = chi_square(&[0.25; 4], &obs).unwrap();
        assert!((chi.statistic - 2.0).abs() < 1e-12);
        assert_eq!(chi.dof, 3);

        let exact = EmpiricalDist {
            counts: vec![0, 100, 200, 300],
            trials: 600,
        };
        let chi = chi_square(&analytic_dist(&[1.0, 2.0, 3.0][..]), &exact).unwrap();
        assert_eq!(chi.statistic, 0.0);
        assert_eq!(chi.dof, 2, "the empty none-bin is not a bin");

        let impossible = EmpiricalDist {
            counts: vec![1, 99],
            trials: 100,
        };
        let chi = chi_square(&[0.0, 1.0], &impossible).unwrap();
        assert!(!chi.passes());

        let none = EmpiricalDist::new(1);
        assert_eq!(chi_square(&[0.0, 1.0], &none), Err(StatsError::NoTrials));
    }

    #[test]
    fn chi_square_merges_thin_bins() {
        // Expected counts 2, 2, 96 at 100 trials: the two thin bins merge
        // with the heavy one into a single group.
        let obs = EmpiricalDist {
            counts: vec![3, 1, 96],
            trials: 100,
        };
        let chi = chi_square(&[0.02, 0.02, 0.96], &obs).unwrap();
        assert_eq!(chi.dof, 0);
        assert!(chi.passes());
    }

    #[test]
    fn critical_value_matches_tables() {
        // Tabulated 99.9th percentiles.
        assert!((chi_square_critical(1) - 10.828).abs() < 1e-3);
        assert!((chi_square_critical(10) - 29.588).abs() < 1e-3);
        assert_eq!(chi_square_critical(0), 0.0);
    }

    #[test]
    fn node2vec_bruteforce_cases() {
        // Triangle 0-1-2: walking 0 -> 1, candidates from 1 are 0 (return)
        // and 2 (adjacent to 0).
        let g = build_csr(&parse_edge_list("0 1\n1 0\n0 2\n2 0\n1 2\n2 1\n".as_bytes()).unwrap(), 3).unwrap();
        let p = node2vec_bruteforce(&g, 0, 1, 2.0, 0.5, false);
        assert!(close(&p, &[0.0, 0.5 / 1.5, 1.0 / 1.5]));
        // Path 0 -> 1 -> 2 with 2 not adjacent to 0.
        let g = build_csr(&parse_edge_list("0 1\n1 0\n1 2\n".as_bytes()).unwrap(), 3).unwrap();
        let p = node2vec_bruteforce(&g, 0, 1, 2.0, 0.5, false);
        assert!(close(&p, &[0.0, 0.5 / 2.5, 2.0 / 2.5]));
    }

    #[test]
    fn exhaustive_base_cases() {
        for bits in 0..=4 {
            assert_eq!(rs_exhaustive_oracle(&[1.0], bits).unwrap(), vec![0.0, 1.0]);
        }
        let p = rs_exhaustive_oracle(&[1.0, 1.0], 4).unwrap();
        assert!((p[2] - 0.5).abs() <= 1.0 / 16.0);
        let p = rs_exhaustive_oracle(&[3.0, 1.0], 4).unwrap();
        assert!((p[1] - 0.75).abs() <= 1.0 / 16.0 && (p[2] - 0.25).abs() <= 1.0 / 16.0);
        assert!(rs_exhaustive_oracle(&[1.0; 5], 2).is_err());
        assert!(rs_exhaustive_oracle(&[1.0], 5).is_err());
        assert_eq!(exhaustive_draws(0b0111, 2, 2), vec![0.875, 0.375]);
    }

    fn tiny_corpus() -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for n in 1..=3u32 {
            for code in 0..4u32.pow(n) {
                let w: Vec<f64> = (0..n).map(|i| ((code / 4u32.pow(i)) % 4) as f64).collect();
                if w.iter().any(|&x| x > 0.0) {
                    out.push(w);
                }
            }
        }
        out
    }

    fn max_deviation(bits: u32) -> f64 {
        tiny_corpus()
            .iter()
            .map(|w| {
                let e = rs_exhaustive_oracle(w, bits).unwrap();
                let a = analytic_dist(&w[..]);
                e.iter().zip(&a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn exhaustive_oracle_converges() {
        let d1 = max_deviation(1);
        let d2 = max_deviation(2);
        let d4 = max_deviation(4);
        assert!(d2 <= d1 / 2.0 && d4 <= d2 / 2.0, "{d1} {d2} {d4}");
        assert!(d4 <= 1.0 / 16.0);
    }

    #[test]
    fn integer_weights_normalize_exactly() {
        // For integer weights every p(i) * total is an integer up to rounding.
        for w in tiny_corpus() {
            let p = analytic_dist(&w[..]);
            let total: f64 = w.iter().sum();
            for (i, &wi) in w.iter().enumerate() {
                assert!((p[i + 1] * total - wi).abs() < 1e-12);
            }
        }
    }

    fn dist(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("non-zero", |v| {
            let s: f64 = v.iter().sum();
            (s > 0.0).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn tvd_is_a_metric((p, q, r) in (1usize..12).prop_flat_map(|n| (dist(n), dist(n), dist(n)))) {
            let pq = tvd(&p, &q).unwrap();
            prop_assert!((pq - tvd(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
            prop_assert!(pq <= tvd(&p, &r).unwrap() + tvd(&r, &q).unwrap() + 1e-12);
        }
    }
}
