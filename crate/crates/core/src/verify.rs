//! Distribution checks of the samplers against the analytic law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::{weight_pool, BenchWeights};
use crate::graph::GraphError;
use crate::rng::{combine, UniformSource};
use crate::samplers::{uniform_index, LaneGroup, SampleError, SamplerKind, SamplerKit, Selection};
use crate::stats::{analytic_dist, goodness_of_fit, tvd, tvd_threshold, EmpiricalDist, Fit};

/// Attempts per check; a check passes if any attempt passes.
pub const DEFAULT_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub sampler: SamplerKind,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub attempts: u32,
    /// Replace the sampler with a weight-blind uniform pick. A negative
    /// control: verification must fail on skewed weights.
    pub corrupt_uniform: bool,
}

impl VerifyConfig {
    pub fn new(sampler: SamplerKind, k: usize, trials: u64, seed: u64) -> Self {
        VerifyConfig {
            sampler,
            k,
            trials,
            seed,
            attempts: DEFAULT_ATTEMPTS,
            corrupt_uniform: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub sampler: String,
    pub k: usize,
    pub n: usize,
    pub trials: u64,
    /// Attempts used, at most the configured count.
    pub attempts: u32,
    pub tvd: f64,
    pub tvd_bound: f64,
    pub chi2: f64,
    pub dof: usize,
    pub critical: f64,
    pub pass: bool,
}

impl VerifyReport {
    fn from_fit(cfg: &VerifyConfig, n: usize, attempts: u32, fit: Fit) -> Self {
        VerifyReport {
            sampler: if cfg.corrupt_uniform {
                "corrupt-uniform".to_string()
            } else {
                cfg.sampler.name().to_string()
            },
            k: cfg.k,
            n,
            trials: cfg.trials,
            attempts,
            tvd: fit.tvd,
            tvd_bound: fit.tvd_bound,
            chi2: fit.chi2,
            dof: fit.dof,
            critical: fit.critical,
            pass: fit.pass,
        }
    }
}

/// Selection counts of `trials` independent samples.
pub fn sample_distribution(
    kind: SamplerKind,
    w: &[f64],
    k: usize,
    trials: u64,
    seed: u64,
    corrupt_uniform: bool,
) -> Result<EmpiricalDist, SampleError> {
    let mut kit = SamplerKit::new(kind, LaneGroup::new(k, seed, 0));
    let mut dist = EmpiricalDist::new(w.len());
    for _ in 0..trials {
        let s = if corrupt_uniform {
            if w.is_empty() {
                Selection::NONE
            } else {
                let mut lane = kit.lanes.lane(0);
                let i = uniform_index(&mut lane, w.len());
                lane.next_uniform();
                Selection::from_position(i)
            }
        } else {
            kit.sample(w)?.0
        };
        dist.record(s);
    }
    Ok(dist)
}

/// Samples `w` and tests the counts against `w(i) / sum(w)`, retrying with
/// fresh seeds up to `cfg.attempts` times.
pub fn verify_sampler(w: &[f64], cfg: &VerifyConfig) -> Result<VerifyReport, SampleError> {
    let expected = analytic_dist(w);
    let mut last = None;
    for attempt in 0..cfg.attempts.max(1) {
        let seed = combine(cfg.seed, attempt as u64);
        let observed = sample_distribution(cfg.sampler, w, cfg.k, cfg.trials, seed, cfg.corrupt_uniform)?;
        let fit = goodness_of_fit(&expected, &observed).expect("lengths match and trials > 0");
        let report = VerifyReport::from_fit(cfg, w.len(), attempt + 1, fit);
        if report.pass {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossReport {
    pub first: String,
    pub second: String,
    pub n: usize,
    pub trials: u64,
    pub tvd: f64,
    /// Twice the single-sample bound: both sides carry sampling noise.
    pub tvd_bound: f64,
    pub pass: bool,
}

/// Pairwise check of two samplers' empirical distributions.
pub fn cross_check(
    first: SamplerKind,
    second: SamplerKind,
    w: &[f64],
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<CrossReport, SampleError> {
    let a = sample_distribution(first, w, k, trials, combine(seed, 1), false)?;
    let b = sample_distribution(second, w, k, trials, combine(seed, 2), false)?;
    let d = tvd(&a.probabilities(), &b.probabilities()).expect("equal lengths");
    let bound = 2.0 * tvd_threshold(w.len() + 1, trials);
    Ok(CrossReport {
        first: first.name().to_string(),
        second: second.name().to_string(),
        n: w.len(),
        trials,
        tvd: d,
        tvd_bound: bound,
        pass: d <= bound,
    })
}

/// `count` test vectors with lengths in `[1, 64]`: the first has a single
/// positive weight, the second mixes zeros into integer weights, and the
/// rest alternate between integer weights in `[0, 9]` and real weights.
pub fn weight_corpus(seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let n = rng.random_range(1..=64usize);
        let w: Vec<f64> = match i {
            0 => {
                let hot = rng.random_range(0..n);
                (0..n).map(|j| if j == hot { 3.0 } else { 0.0 }).collect()
            }
            1 => (0..n)
                .map(|j| if j % 2 == 0 { 0.0 } else { rng.random_range(1..=9u32) as f64 })
                .collect(),
            _ if i % 2 == 0 => (0..n).map(|_| rng.random_range(0..=9u32) as f64).collect(),
            _ => (0..n).map(|_| rng.random::<f64>() * 10.0).collect(),
        };
        if w.iter().all(|&x| x == 0.0) {
            let mut w = w;
            w[n - 1] = 1.0;
            out.push(w);
        } else {
            out.push(w);
        }
    }
    out
}

/// Parses either a comma-separated weight list (`1,2,3`) or a generator spec
/// `uniform:N[:SEED]` / `lognormal:N:SIGMA[:SEED]`.
pub fn parse_weights(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    let mut parts = spec.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let num = |s: &str, what: &str| -> Result<f64, String> {
        s.trim().parse::<f64>().map_err(|_| format!("bad {what} {s:?} in weight spec {spec:?}"))
    };
    let count = |s: &str| -> Result<usize, String> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad length {s:?} in weight spec {spec:?}"))
    };
    let seed = |s: Option<&&str>| -> Result<u64, String> {
        s.map_or(Ok(0), |s| s.trim().parse().map_err(|_| format!("bad seed {s:?} in weight spec {spec:?}")))
    };
    let generated = |n: usize, weights: BenchWeights, seed: u64| -> Result<Vec<f64>, String> {
        weight_pool(n, 1, weights, seed)
            .map(|mut v| v.swap_remove(0))
            .map_err(|e: GraphError| e.to_string())
    };
    match head {
        "uniform" if !rest.is_empty() && rest.len() <= 2 => {
            generated(count(rest[0])?, BenchWeights::Uniform, seed(rest.get(1))?)
        }
        "lognormal" if rest.len() >= 2 && rest.len() <= 3 => {
            let sigma = num(rest[1], "sigma")?;
            generated(count(rest[0])?, BenchWeights::LogNormal { sigma }, seed(rest.get(2))?)
        }
        _ if rest.is_empty() => {
            let w: Vec<f64> = spec
                .split(',')
                .map(|s| num(s, "weight"))
                .collect::<Result<_, _>>()?;
            if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(format!("weights must be finite and non-negative, got {bad}"));
            }
            Ok(w)
        }
        _ => Err(format!(
            "unrecognised weight spec {spec:?} (expected 1,2,3 or uniform:N[:SEED] or lognormal:N:SIGMA[:SEED])"
        )),
    }
}
