//! CSR graph storage, edge-list parsing, binary persistence and synthetic
//! edge attributes.

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

pub type VertexId = u32;

pub const GRAPH_MAGIC: &[u8; 4] = b"FWG1";
const HEADER_LEN: usize = 4 + 8 + 8 + 1;
const FLAG_WEIGHTS: u8 = 1;
const FLAG_LABELS: u8 = 2;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: negative weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },
    #[error("vertex id {id} out of range for {vertex_count} vertices")]
    VertexOutOfRange { id: u64, vertex_count: usize },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("bad magic {0:?}, expected \"FWG1\"")]
    BadMagic([u8; 4]),
    #[error("truncated graph file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: u64,
    pub target: u64,
    pub weight: f32,
    pub label: u8,
}

/// Parsed edges in input order. `has_weights`/`has_labels` record whether any
/// line carried the optional column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeList {
    pub edges: Vec<Edge>,
    pub has_weights: bool,
    pub has_labels: bool,
}

impl EdgeList {
    /// One past the largest vertex id mentioned.
    pub fn vertex_count_hint(&self) -> usize {
        self.edges
            .iter()
            .map(|e| e.source.max(e.target) + 1)
            .max()
            .unwrap_or(0) as usize
    }

    /// Renumbers vertex ids densely in order of first appearance and returns
    /// the new vertex count.
    pub fn compact(&mut self) -> usize {
        let mut ids = std::collections::HashMap::new();
        for e in &mut self.edges {
            let next = ids.len() as u64;
            e.source = *ids.entry(e.source).or_insert(next);
            let next = ids.len() as u64;
            e.target = *ids.entry(e.target).or_insert(next);
        }
        ids.len()
    }

    /// Adds the reverse of every non-loop edge.
    pub fn symmetrize(&mut self) {
        let reversed: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| e.source != e.target)
            .map(|e| Edge {
                source: e.target,
                target: e.source,
                ..*e
            })
            .collect();
        self.edges.extend(reversed);
    }
}

/// Parses `src dst [weight] [label]` lines. Lines starting with `#` or `%`
/// and blank lines are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList, GraphError> {
    let mut out = EdgeList::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut id = |name: &str| -> Result<u64, GraphError> {
            let tok = tokens.next().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: format!("missing {name}"),
            })?;
            tok.parse().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("bad {name} {tok:?}"),
            })
        };
        let source = id("source")?;
        let target = id("target")?;
        let mut edge = Edge {
            source,
            target,
            weight: 1.0,
            label: 0,
        };
        if let Some(tok) = tokens.next() {
            let weight: f64 = tok.parse().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("bad weight {tok:?}"),
            })?;
            if weight < 0.0 {
                return Err(GraphError::NegativeWeight {
                    line: line_no,
                    weight,
                });
            }
            if !weight.is_finite() {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("non-finite weight {tok:?}"),
                });
            }
            edge.weight = weight as f32;
            out.has_weights = true;
        }
        if let Some(tok) = tokens.next() {
            edge.label = tok.parse().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("bad label {tok:?}"),
            })?;
            out.has_labels = true;
        }
        if let Some(tok) = tokens.next() {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("unexpected trailing token {tok:?}"),
            });
        }
        out.edges.push(edge);
    }
    Ok(out)
}

/// Immutable CSR adjacency. Neighbor ranges are sorted by target id.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<u64>,
    targets: Vec<VertexId>,
    weights: Option<Vec<f32>>,
    labels: Option<Vec<u8>>,
}

impl Graph {
    /// Validates and assembles a graph from raw CSR arrays.
    pub fn from_parts(
        offsets: Vec<u64>,
        targets: Vec<VertexId>,
        weights: Option<Vec<f32>>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self, GraphError> {
        let g = Graph {
            offsets,
            targets,
            weights,
            labels,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let invalid = |m: String| Err(GraphError::Invalid(m));
        if self.offsets.first() != Some(&0) {
            return invalid("offsets must start at 0".into());
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return invalid("offsets must be non-decreasing".into());
        }
        if *self.offsets.last().unwrap() != self.targets.len() as u64 {
            return invalid("last offset must equal edge count".into());
        }
        if self.vertex_count() > VertexId::MAX as usize {
            return invalid("vertex count exceeds 32-bit ids".into());
        }
        let vc = self.vertex_count();
        if let Some(&t) = self.targets.iter().find(|&&t| t as usize >= vc) {
            return Err(GraphError::VertexOutOfRange {
                id: t as u64,
                vertex_count: vc,
            });
        }
        if let Some(w) = &self.weights {
            if w.len() != self.targets.len() {
                return invalid("weights length must equal edge count".into());
            }
            if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return invalid(format!("weight {bad} is negative or non-finite"));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != self.targets.len() {
                return invalid("labels length must equal edge count".into());
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn edge_range(&self, v: VertexId) -> Range<usize> {
        let v = v as usize;
        self.offsets[v] as usize..self.offsets[v + 1] as usize
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.targets[self.edge_range(v)]
    }

    /// Edge weights, or `None` for an unweighted graph (every weight is 1).
    pub fn weights(&self) -> Option<&[f32]> {
        self.weights.as_deref()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn targets(&self) -> &[VertexId] {
        &self.targets
    }

    #[inline]
    pub fn weight(&self, edge: usize) -> f32 {
        self.weights.as_ref().map_or(1.0, |w| w[edge])
    }

    #[inline]
    pub fn label(&self, edge: usize) -> u8 {
        self.labels.as_ref().map_or(0, |l| l[edge])
    }

    /// O(log d) membership test on the sorted neighbor list of `u`.
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count() as VertexId)
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// The lowest-numbered vertex of maximum degree.
    pub fn max_degree_vertex(&self) -> Option<VertexId> {
        let mut best: Option<(usize, VertexId)> = None;
        for v in 0..self.vertex_count() as VertexId {
            let d = self.degree(v);
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, v));
            }
        }
        best.map(|(_, v)| v)
    }

    /// Bytes held by the CSR arrays.
    pub fn memory_bytes(&self) -> u64 {
        (self.offsets.len() * 8
            + self.targets.len() * 4
            + self.weights.as_ref().map_or(0, |w| w.len() * 4)
            + self.labels.as_ref().map_or(0, |l| l.len())) as u64
    }

    pub fn with_weights(mut self, weights: Vec<f32>) -> Result<Self, GraphError> {
        self.weights = Some(weights);
        self.validate()?;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self, GraphError> {
        self.labels = Some(labels);
        self.validate()?;
        Ok(self)
    }
}

/// Builds a CSR graph. Edges are bucketed by source; within a bucket they are
/// stably sorted by target, so duplicates keep their input order.
pub fn build_csr(edges: &EdgeList, vertex_count: usize) -> Result<Graph, GraphError> {
    if vertex_count > VertexId::MAX as usize {
        return Err(GraphError::Invalid("vertex count exceeds 32-bit ids".into()));
    }
    for e in &edges.edges {
        for id in [e.source, e.target] {
            if id >= vertex_count as u64 {
                return Err(GraphError::VertexOutOfRange { id, vertex_count });
            }
        }
    }
    let mut offsets = vec![0u64; vertex_count + 1];
    for e in &edges.edges {
        offsets[e.source as usize + 1] += 1;
    }
    for v in 0..vertex_count {
        offsets[v + 1] += offsets[v];
    }
    let mut order: Vec<usize> = (0..edges.edges.len()).collect();
    order.sort_by_key(|&i| (edges.edges[i].source, edges.edges[i].target));
    let ordered = order.iter().map(|&i| &edges.edges[i]);
    let targets = ordered.clone().map(|e| e.target as VertexId).collect();
    let weights = edges
        .has_weights
        .then(|| ordered.clone().map(|e| e.weight).collect());
    let labels = edges
        .has_labels
        .then(|| ordered.map(|e| e.label).collect());
    Graph::from_parts(offsets, targets, weights, labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDistribution {
    /// Uniform over `[1, 5)`.
    Uniform,
    LogNormal { mu: f64, sigma: f64 },
}

/// Replaces every edge weight with a draw seeded by `seed`.
pub fn synthesize_weights(
    g: &Graph,
    seed: u64,
    dist: WeightDistribution,
) -> Result<Graph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = match dist {
        WeightDistribution::Uniform => (0..g.edge_count())
            .map(|_| rng.random_range(1.0f32..5.0f32))
            .collect(),
        WeightDistribution::LogNormal { mu, sigma } => {
            let d = lognormal(mu, sigma)?;
            (0..g.edge_count())
                .map(|_| d.sample(&mut rng) as f32)
                .collect()
        }
    };
    g.clone().with_weights(weights)
}

pub(crate) fn lognormal(mu: f64, sigma: f64) -> Result<LogNormal<f64>, GraphError> {
    if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
        return Err(GraphError::Invalid(format!(
            "log-normal needs finite mu and sigma > 0, got mu={mu} sigma={sigma}"
        )));
    }
    LogNormal::new(mu, sigma).map_err(|e| GraphError::Invalid(e.to_string()))
}

/// Replaces every edge label with a uniform draw from `[0, label_count)`.
pub fn synthesize_labels(g: &Graph, seed: u64, label_count: u32) -> Result<Graph, GraphError> {
    if !(1..=256).contains(&label_count) {
        return Err(GraphError::Invalid(format!(
            "label count must be in [1, 256], got {label_count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..g.edge_count())
        .map(|_| rng.random_range(0..label_count) as u8)
        .collect();
    g.clone().with_labels(labels)
}

pub fn save_binary(g: &Graph, path: &Path) -> Result<(), GraphError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_binary(g, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_binary(path: &Path) -> Result<Graph, GraphError> {
    read_binary(File::open(path)?)
}

/// Writes the `FWG1` little-endian layout; the trailing CRC32 covers every
/// byte after the header.
pub fn write_binary<W: Write>(g: &Graph, out: &mut W) -> Result<(), GraphError> {
    let mut flags = 0u8;
    if g.weights.is_some() {
        flags |= FLAG_WEIGHTS;
    }
    if g.labels.is_some() {
        flags |= FLAG_LABELS;
    }
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(GRAPH_MAGIC);
    header.extend_from_slice(&(g.vertex_count() as u64).to_le_bytes());
    header.extend_from_slice(&(g.edge_count() as u64).to_le_bytes());
    header.push(flags);
    out.write_all(&header)?;

    let mut payload = Vec::with_capacity(g.memory_bytes() as usize);
    for o in &g.offsets {
        payload.extend_from_slice(&o.to_le_bytes());
    }
    for t in &g.targets {
        payload.extend_from_slice(&t.to_le_bytes());
    }
    if let Some(w) = &g.weights {
        for x in w {
            payload.extend_from_slice(&x.to_le_bytes());
        }
    }
    if let Some(l) = &g.labels {
        payload.extend_from_slice(l);
    }
    out.write_all(&payload)?;
    out.write_all(&crc32fast::hash(&payload).to_le_bytes())?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Graph, GraphError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != GRAPH_MAGIC {
            return Err(GraphError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(GraphError::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != GRAPH_MAGIC {
        return Err(GraphError::BadMagic(magic));
    }
    let vc = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let ec = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let flags = bytes[20];
    let per_edge = 4 + if flags & FLAG_WEIGHTS != 0 { 4 } else { 0 }
        + if flags & FLAG_LABELS != 0 { 1 } else { 0 };
    let payload_len = vc
        .checked_add(1)
        .and_then(|v| v.checked_mul(8))
        .and_then(|o| ec.checked_mul(per_edge).and_then(|e| o.checked_add(e)))
        .ok_or_else(|| GraphError::Invalid("header sizes overflow".into()))?;
    let expected = HEADER_LEN as u64 + payload_len + 4;
    if (bytes.len() as u64) < expected {
        return Err(GraphError::Truncated {
            expected,
            found: bytes.len() as u64,
        });
    }
    if bytes.len() as u64 > expected {
        return Err(GraphError::Invalid(format!(
            "{} trailing bytes after checksum",
            bytes.len() as u64 - expected
        )));
    }
    let (vc, ec) = (vc as usize, ec as usize);
    let payload = &bytes[HEADER_LEN..HEADER_LEN + payload_len as usize];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(GraphError::ChecksumMismatch { stored, computed });
    }

    let (off_bytes, rest) = payload.split_at((vc + 1) * 8);
    let offsets = off_bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (tgt_bytes, mut rest) = rest.split_at(ec * 4);
    let targets = tgt_bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let weights = if flags & FLAG_WEIGHTS != 0 {
        let (w, r) = rest.split_at(ec * 4);
        rest = r;
        Some(
            w.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    } else {
        None
    };
    let labels = (flags & FLAG_LABELS != 0).then(|| rest.to_vec());
    Graph::from_parts(offsets, targets, weights, labels)
}

/// `edge_count` directed edges with uniformly random targets. Edge `i` leaves
/// vertex `i` for `i < vertex_count` and a uniformly random vertex after that,
/// so with `edge_count >= vertex_count` every vertex has an out-edge.
pub fn random_graph(vertex_count: usize, edge_count: usize, seed: u64) -> Result<Graph, GraphError> {
    if vertex_count == 0 || vertex_count > VertexId::MAX as usize {
        return Err(GraphError::Invalid(format!(
            "random graph needs between 1 and {} vertices, got {vertex_count}",
            VertexId::MAX
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = (0..edge_count)
        .map(|i| Edge {
            source: if i < vertex_count {
                i as u64
            } else {
                rng.random_range(0..vertex_count as u64)
            },
            target: rng.random_range(0..vertex_count as u64),
            weight: 1.0,
            label: 0,
        })
        .collect();
    build_csr(
        &EdgeList {
            edges,
            has_weights: false,
            has_labels: false,
        },
        vertex_count,
    )
}

/// Undirected star: vertex 0 linked both ways to vertices `1..=leaves`.
pub fn star_graph(leaves: usize) -> Result<Graph, GraphError> {
    let edges = (1..=leaves as u64)
        .flat_map(|leaf| {
            [(0, leaf), (leaf, 0)].map(|(source, target)| Edge {
                source,
                target,
                weight: 1.0,
                label: 0,
            })
        })
        .collect();
    build_csr(
        &EdgeList {
            edges,
            has_weights: false,
            has_labels: false,
        },
        leaves + 1,
    )
}
