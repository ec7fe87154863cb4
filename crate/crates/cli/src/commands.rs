use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::info;
use serde::Serialize;

use rswalk::apps::{App, AppConfig, AppError};
use rswalk::bench::{bench_grid, write_csv, BenchConfig, BenchWeights};
use rswalk::engine::{
    run, throughput_report, EngineConfig, EngineError, NullSink, RunStats, WalkFileWriter,
};
use rswalk::graph::{
    build_csr, load_binary, parse_edge_list, random_graph, save_binary, synthesize_labels,
    synthesize_weights, Graph, GraphError, VertexId, WeightDistribution,
};
use rswalk::verify::{cross_check, parse_weights, verify_sampler, VerifyConfig};

use crate::{AppName, BenchArgs, CliError, ConvertArgs, GenerateArgs, SynthArgs, VerifyArgs, WalkArgs, WeightGen};

fn log_config<T: Serialize>(command: &str, args: &T) {
    match serde_json::to_string(args) {
        Ok(json) => info!("{command} config: {json}"),
        Err(e) => info!("{command} config not serializable: {e}"),
    }
}

fn graph_error(path: &Path, e: GraphError) -> CliError {
    match e {
        GraphError::Io(e) => CliError::Io(format!("{}: {e}", path.display())),
        other => CliError::Io(format!("{}: {other}", path.display())),
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn apply_synth(g: Graph, s: &SynthArgs) -> Result<Graph, GraphError> {
    let g = match s.gen_weights {
        None => g,
        Some(WeightGen::Uniform) => synthesize_weights(&g, s.seed, WeightDistribution::Uniform)?,
        Some(WeightGen::Lognormal) => synthesize_weights(
            &g,
            s.seed,
            WeightDistribution::LogNormal {
                mu: 0.0,
                sigma: s.sigma,
            },
        )?,
    };
    match s.gen_labels {
        None => Ok(g),
        Some(n) => synthesize_labels(&g, s.seed, n),
    }
}

fn check_synth(s: &SynthArgs) -> Result<(), CliError> {
    if let Some(n) = s.gen_labels {
        if !(1..=256).contains(&n) {
            return Err(CliError::Usage(format!("--gen-labels must be in [1, 256], got {n}")));
        }
    }
    if s.gen_weights == Some(WeightGen::Lognormal) && !(s.sigma > 0.0 && s.sigma.is_finite()) {
        return Err(CliError::Usage(format!("--sigma must be positive, got {}", s.sigma)));
    }
    Ok(())
}

pub fn convert(a: &ConvertArgs) -> Result<(), CliError> {
    log_config("convert", a);
    check_synth(&a.synth)?;
    let file = File::open(&a.input).map_err(|e| io_error(&a.input, e))?;
    let mut edges = parse_edge_list(BufReader::new(file)).map_err(|e| graph_error(&a.input, e))?;
    let vertex_count = if a.compact {
        edges.compact()
    } else {
        edges.vertex_count_hint()
    };
    if a.symmetrize {
        edges.symmetrize();
    }
    let g = build_csr(&edges, vertex_count).map_err(|e| graph_error(&a.input, e))?;
    let g = apply_synth(g, &a.synth).map_err(|e| graph_error(&a.input, e))?;
    save_binary(&g, &a.output).map_err(|e| graph_error(&a.output, e))?;
    info!(
        "wrote {} vertices, {} edges to {}",
        g.vertex_count(),
        g.edge_count(),
        a.output.display()
    );
    Ok(())
}

pub fn generate(a: &GenerateArgs) -> Result<(), CliError> {
    log_config("generate", a);
    check_synth(&a.synth)?;
    let g = random_graph(a.vertices, a.edges, a.synth.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let g = apply_synth(g, &a.synth).map_err(|e| CliError::Usage(e.to_string()))?;
    save_binary(&g, &a.output).map_err(|e| graph_error(&a.output, e))?;
    info!("wrote {} vertices, {} edges to {}", g.vertex_count(), g.edge_count(), a.output.display());
    Ok(())
}

/// Binary graphs are recognised by their magic bytes; anything else is read
/// as a text edge list.
pub fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let mut file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut magic = [0u8; 4];
    let n = file.read(&mut magic).map_err(|e| io_error(path, e))?;
    if n == 4 && &magic == rswalk::graph::GRAPH_MAGIC {
        return load_binary(path).map_err(|e| graph_error(path, e));
    }
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let edges = parse_edge_list(BufReader::new(file)).map_err(|e| graph_error(path, e))?;
    let g = build_csr(&edges, edges.vertex_count_hint()).map_err(|e| graph_error(path, e))?;
    Ok(g)
}

fn app_config(a: &WalkArgs) -> Result<AppConfig, AppError> {
    let app = match a.app {
        AppName::Deepwalk => App::DeepWalk,
        AppName::Ppr => App::Ppr { stop_prob: a.stop_prob },
        AppName::Node2vec => App::Node2Vec {
            a: a.return_param,
            b: a.inout_param,
        },
        AppName::Metapath => App::MetaPath {
            schema: a.schema.clone(),
        },
    };
    AppConfig::new(app, a.length, !a.unweighted)
}

fn engine_config(a: &WalkArgs) -> EngineConfig {
    EngineConfig {
        workers: a.workers,
        k_s: a.ks,
        k_b: a.kb,
        local_pool: a.local_pool,
        d_t: a.degree_threshold,
        memory_budget: a.memory_budget,
        graph_bytes: None,
        vertex_bytes: a.vertex_bytes,
        replay: a.replay,
        seed: a.seed,
        sampler: a.sampler,
    }
}

/// Start vertices from the query-selection flags.
pub fn select_starts(
    g: &Graph,
    queries: Option<usize>,
    all_vertices: bool,
    ppr_hub: bool,
) -> Result<Vec<VertexId>, CliError> {
    if all_vertices && queries.is_some() {
        return Err(CliError::Usage("--queries conflicts with --all-vertices".into()));
    }
    if all_vertices && ppr_hub {
        return Err(CliError::Usage("--ppr-hub conflicts with --all-vertices".into()));
    }
    let v = g.vertex_count();
    if v == 0 {
        return Err(CliError::Usage("the graph has no vertices".into()));
    }
    let count = queries.unwrap_or(v);
    if ppr_hub {
        let hub = g.max_degree_vertex().expect("non-empty graph");
        return Ok(vec![hub; count]);
    }
    Ok((0..count).map(|i| (i % v) as VertexId).collect())
}

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::Config(_) | EngineError::App(_) | EngineError::BadStart { .. } => CliError::Usage(e.to_string()),
        EngineError::Sample(_) | EngineError::Io(_) => CliError::Io(e.to_string()),
    }
}

#[derive(Debug, Serialize)]
struct WalkSummary<'a> {
    app: &'a str,
    sampler: &'a str,
    queries: u64,
    batches: u64,
    batch_size: usize,
    workers: usize,
    elapsed_ms: f64,
    edges_per_sec: f64,
    steps_per_sec: f64,
    steps: u64,
    edges: u64,
    collectives: u64,
    small_tasks: u64,
    large_tasks: u64,
    output: Option<String>,
}

fn summary<'a>(a: &'a WalkArgs, app: &'a AppConfig, stats: &RunStats) -> WalkSummary<'a> {
    let t = throughput_report(stats);
    WalkSummary {
        app: app.app.name(),
        sampler: a.sampler.name(),
        queries: stats.queries,
        batches: stats.batches,
        batch_size: stats.batch_size,
        workers: a.workers,
        elapsed_ms: stats.elapsed.as_secs_f64() * 1e3,
        edges_per_sec: t.edges_per_sec,
        steps_per_sec: t.steps_per_sec,
        steps: stats.steps,
        edges: stats.edges,
        collectives: stats.collectives,
        small_tasks: stats.small_tasks,
        large_tasks: stats.large_tasks,
        output: a.output.as_ref().map(|p| p.display().to_string()),
    }
}

fn prepare(a: &WalkArgs) -> Result<(Graph, AppConfig, EngineConfig, Vec<VertexId>), CliError> {
    let app = app_config(a).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = engine_config(a);
    cfg.validate().map_err(engine_error)?;
    let g = load_graph(&a.graph)?;
    let starts = select_starts(&g, a.queries, a.all_vertices, a.ppr_hub)?;
    info!(
        "graph {}: {} vertices, {} edges; {} queries",
        a.graph.display(),
        g.vertex_count(),
        g.edge_count(),
        starts.len()
    );
    Ok((g, app, cfg, starts))
}

pub fn walk(a: &WalkArgs) -> Result<(), CliError> {
    log_config("walk", a);
    let (g, app, cfg, starts) = prepare(a)?;
    let stats = match &a.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_error(path, e))?;
            let mut sink = WalkFileWriter::new(BufWriter::new(file));
            run(&g, &starts, &app, &cfg, &mut sink).map_err(engine_error)?
        }
        None => run(&g, &starts, &app, &cfg, &mut NullSink::default()).map_err(engine_error)?,
    };
    let json = serde_json::to_string_pretty(&summary(a, &app, &stats)).expect("summary serializes");
    if let Some(path) = &a.summary {
        std::fs::write(path, format!("{json}\n")).map_err(|e| io_error(path, e))?;
    }
    println!("{json}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct WalkBenchRow<'a> {
    app: &'a str,
    sampler: &'a str,
    workers: usize,
    queries: u64,
    edges_per_sec: f64,
    steps_per_sec: f64,
    batches: u64,
    collectives: u64,
    elapsed_ms: f64,
}

pub fn bench_walk(a: &WalkArgs) -> Result<(), CliError> {
    log_config("bench-walk", a);
    let (g, app, cfg, starts) = prepare(a)?;
    let stats = run(&g, &starts, &app, &cfg, &mut NullSink::default()).map_err(engine_error)?;
    let t = throughput_report(&stats);
    let row = WalkBenchRow {
        app: app.app.name(),
        sampler: a.sampler.name(),
        workers: a.workers,
        queries: stats.queries,
        edges_per_sec: t.edges_per_sec,
        steps_per_sec: t.steps_per_sec,
        batches: stats.batches,
        collectives: stats.collectives,
        elapsed_ms: stats.elapsed.as_secs_f64() * 1e3,
    };
    emit_csv(&[row], a.output.as_deref())
}

fn emit_csv<T: Serialize>(rows: &[T], path: Option<&Path>) -> Result<(), CliError> {
    let result = match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_error(p, e))?;
            write_csv(rows, BufWriter::new(file))
        }
        None => write_csv(rows, io::stdout().lock()),
    };
    result.map_err(|e| CliError::Io(format!("writing CSV: {e}")))
}

fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    match s.strip_prefix("2^") {
        Some(e) => e
            .parse::<u32>()
            .ok()
            .filter(|&e| e < usize::BITS)
            .map(|e| 1usize << e)
            .ok_or_else(|| format!("bad size {s:?}")),
        None => s.parse().map_err(|_| format!("bad size {s:?}")),
    }
}

/// Expands `64`, `2^6` and power-of-two ranges `2^6..2^20`.
pub fn parse_sizes(items: &[String]) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in items {
        match item.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (parse_size(lo)?, parse_size(hi)?);
                if !lo.is_power_of_two() || lo > hi {
                    return Err(format!("bad size range {item:?}"));
                }
                let mut n = lo;
                while n <= hi {
                    out.push(n);
                    n <<= 1;
                }
            }
            None => out.push(parse_size(item)?),
        }
    }
    if out.contains(&0) {
        return Err("sampling sizes must be positive".into());
    }
    Ok(out)
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    log_config("bench", a);
    let sizes = parse_sizes(&a.sizes).map_err(CliError::Usage)?;
    if a.k.contains(&0) {
        return Err(CliError::Usage("lane widths must be positive".into()));
    }
    let weights = if a.sigma.is_empty() {
        vec![BenchWeights::Uniform]
    } else {
        a.sigma.iter().map(|&sigma| BenchWeights::LogNormal { sigma }).collect()
    };
    let cfg = BenchConfig {
        samplers: a.samplers.clone(),
        ks: a.k.clone(),
        sizes,
        weights,
        element_budget: a.budget,
        seed: a.seed,
    };
    let rows = bench_grid(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    emit_csv(&rows, a.output.as_deref())
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    log_config("verify", a);
    let w = parse_weights(&a.weights).map_err(CliError::Usage)?;
    if a.k == 0 || a.trials == 0 {
        return Err(CliError::Usage("--k and --trials must be positive".into()));
    }
    let (json, pass) = match a.against {
        Some(other) => {
            let r = cross_check(a.sampler, other, &w, a.k, a.trials, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
            (serde_json::to_string_pretty(&r), r.pass)
        }
        None => {
            let cfg = VerifyConfig {
                attempts: a.attempts,
                corrupt_uniform: a.corrupt_uniform,
                ..VerifyConfig::new(a.sampler, a.k, a.trials, a.seed)
            };
            let r = verify_sampler(&w, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
            (serde_json::to_string_pretty(&r), r.pass)
        }
    };
    let json = json.expect("report serializes");
    let mut out = io::stdout().lock();
    writeln!(out, "{json}").map_err(|e| CliError::Io(e.to_string()))?;
    if pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}
