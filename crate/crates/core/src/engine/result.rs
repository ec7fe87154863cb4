//! Result pools, output sinks and the `FWR1` walk file.

use std::io::{self, Read, Write};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use crate::apps::{App, AppConfig};
use crate::graph::{Graph, VertexId};

/// Marks unused tail slots of a sequence.
pub const SENTINEL: u32 = u32::MAX;

const WALK_MAGIC: &[u8; 4] = b"FWR1";

/// Fixed-stride sequence storage for one batch. Each query owns the slots
/// `[i * max_len, (i + 1) * max_len)`; writes go through relaxed atomics so
/// workers can fill disjoint slots through a shared reference.
#[derive(Debug)]
pub struct ResultPool {
    max_len: usize,
    first_query: u64,
    count: usize,
    slots: Vec<AtomicU32>,
    lengths: Vec<AtomicU32>,
    double_completions: AtomicU64,
}

impl ResultPool {
    pub fn new(max_len: usize) -> Self {
        ResultPool {
            max_len,
            first_query: 0,
            count: 0,
            slots: Vec::new(),
            lengths: Vec::new(),
            double_completions: AtomicU64::new(0),
        }
    }

    /// Prepares the pool for `count` queries starting at id `first_query`.
    pub fn reset(&mut self, first_query: u64, count: usize) {
        self.first_query = first_query;
        self.count = count;
        let need = count * self.max_len;
        if self.slots.len() < need {
            self.slots.resize_with(need, || AtomicU32::new(SENTINEL));
            self.lengths.resize_with(count, || AtomicU32::new(0));
        }
        for s in &mut self.slots[..need] {
            *s.get_mut() = SENTINEL;
        }
        for l in &mut self.lengths[..count] {
            *l.get_mut() = 0;
        }
        *self.double_completions.get_mut() = 0;
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn first_query(&self) -> u64 {
        self.first_query
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn write(&self, offset: usize, v: VertexId) {
        self.slots[offset].store(v, Ordering::Relaxed);
    }

    /// Records the final length of the query at batch position `pos`.
    pub fn complete(&self, pos: usize, len: u32) {
        let previous = self.lengths[pos].swap(len, Ordering::Relaxed);
        if previous != 0 {
            self.double_completions.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn length(&self, pos: usize) -> u32 {
        self.lengths[pos].load(Ordering::Relaxed)
    }

    /// The full stride of query `pos`, sentinel padding included.
    pub fn slot(&self, pos: usize) -> impl Iterator<Item = u32> + '_ {
        self.slots[pos * self.max_len..(pos + 1) * self.max_len]
            .iter()
            .map(|a| a.load(Ordering::Relaxed))
    }

    /// Queries completed more than once in this batch. Always zero unless the
    /// scheduler is broken.
    pub fn double_completions(&self) -> u64 {
        self.double_completions.load(Ordering::Relaxed)
    }

    pub fn capacity_bytes(&self) -> usize {
        (self.slots.capacity() + self.lengths.capacity()) * 4
    }
}

/// Receives finished batches in query-id order.
pub trait ResultSink: Send {
    fn begin(&mut self, query_count: u64, max_len: u32) -> io::Result<()>;
    fn write_batch(&mut self, pool: &ResultPool) -> io::Result<()>;
    fn finish(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Writes the `FWR1` layout: magic, `u64` query count, `u32` stride, then per
/// query a `u32` length followed by `stride` `u32` slots. Little-endian.
pub struct WalkFileWriter<W: Write + Send> {
    out: W,
    buf: Vec<u8>,
}

impl<W: Write + Send> WalkFileWriter<W> {
    pub fn new(out: W) -> Self {
        WalkFileWriter {
            out,
            buf: Vec::new(),
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write + Send> ResultSink for WalkFileWriter<W> {
    fn begin(&mut self, query_count: u64, max_len: u32) -> io::Result<()> {
        self.out.write_all(WALK_MAGIC)?;
        self.out.write_all(&query_count.to_le_bytes())?;
        self.out.write_all(&max_len.to_le_bytes())
    }

    fn write_batch(&mut self, pool: &ResultPool) -> io::Result<()> {
        self.buf.clear();
        self.buf.reserve(pool.len() * (pool.max_len() + 1) * 4);
        for pos in 0..pool.len() {
            self.buf.extend_from_slice(&pool.length(pos).to_le_bytes());
            for v in pool.slot(pos) {
                self.buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        self.out.write_all(&self.buf)
    }

    fn finish(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Discards sequences; used by benchmarks.
#[derive(Debug, Default)]
pub struct NullSink {
    pub batches: u64,
}

impl ResultSink for NullSink {
    fn begin(&mut self, _: u64, _: u32) -> io::Result<()> {
        Ok(())
    }

    fn write_batch(&mut self, _: &ResultPool) -> io::Result<()> {
        self.batches += 1;
        Ok(())
    }
}

/// All sequences of a run, in query-id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkOutput {
    pub max_len: usize,
    pub lengths: Vec<u32>,
    /// `lengths.len() * max_len` slots.
    pub slots: Vec<u32>,
}

impl WalkOutput {
    pub fn query_count(&self) -> usize {
        self.lengths.len()
    }

    /// The emitted vertices of query `q`.
    pub fn sequence(&self, q: usize) -> &[u32] {
        &self.slot(q)[..self.lengths[q] as usize]
    }

    pub fn slot(&self, q: usize) -> &[u32] {
        &self.slots[q * self.max_len..(q + 1) * self.max_len]
    }

    pub fn total_steps(&self) -> u64 {
        self.lengths.iter().map(|&l| l.saturating_sub(1) as u64).sum()
    }
}

/// Collects every batch in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub output: WalkOutput,
}

impl ResultSink for MemorySink {
    fn begin(&mut self, query_count: u64, max_len: u32) -> io::Result<()> {
        self.output = WalkOutput {
            max_len: max_len as usize,
            lengths: Vec::with_capacity(query_count as usize),
            slots: Vec::with_capacity(query_count as usize * max_len as usize),
        };
        Ok(())
    }

    fn write_batch(&mut self, pool: &ResultPool) -> io::Result<()> {
        for pos in 0..pool.len() {
            self.output.lengths.push(pool.length(pos));
            self.output.slots.extend(pool.slot(pos));
        }
        Ok(())
    }
}

/// Parses an `FWR1` file.
pub fn read_walk_file<R: Read>(mut input: R) -> io::Result<WalkOutput> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[..4] != WALK_MAGIC {
        return Err(bad(format!("bad magic {:?}, expected \"FWR1\"", &header[..4])));
    }
    let count = u64::from_le_bytes(header[4..12].try_into().unwrap()) as usize;
    let max_len = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    let expected = count
        .checked_mul(max_len + 1)
        .and_then(|x| x.checked_mul(4))
        .ok_or_else(|| bad("size overflow".into()))?;
    if body.len() != expected {
        return Err(bad(format!("expected {expected} body bytes, found {}", body.len())));
    }
    let mut words = body.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap()));
    let mut out = WalkOutput {
        max_len,
        lengths: Vec::with_capacity(count),
        slots: Vec::with_capacity(count * max_len),
    };
    for _ in 0..count {
        out.lengths.push(words.next().unwrap());
        out.slots.extend(words.by_ref().take(max_len));
    }
    Ok(out)
}

/// Checks every output-validity invariant of a run: each sequence starts at
/// its start vertex, has a length in `[1, longest]`, walks only along graph
/// edges (with the schema label for metapath) and is sentinel-padded.
pub fn validate_output(
    graph: &Graph,
    starts: &[VertexId],
    app: &AppConfig,
    out: &WalkOutput,
) -> Result<(), String> {
    if out.query_count() != starts.len() {
        return Err(format!("{} sequences for {} starts", out.query_count(), starts.len()));
    }
    let longest = app.longest_sequence();
    for (q, &start) in starts.iter().enumerate() {
        let len = out.lengths[q] as usize;
        if len == 0 || len > longest {
            return Err(format!("query {q}: length {len} outside [1, {longest}]"));
        }
        let slot = out.slot(q);
        if slot[0] != start {
            return Err(format!("query {q}: starts at {} instead of {start}", slot[0]));
        }
        if let Some(i) = slot[len..].iter().position(|&v| v != SENTINEL) {
            return Err(format!("query {q}: slot {} past the end is not padding", len + i));
        }
        for (i, pair) in slot[..len].windows(2).enumerate() {
            let (v, u) = (pair[0], pair[1]);
            if v as usize >= graph.vertex_count() {
                return Err(format!("query {q}: vertex {v} out of range"));
            }
            let ok = match &app.app {
                App::MetaPath { schema } => {
                    let range = graph.edge_range(v);
                    graph.neighbors(v).iter().zip(range).any(|(&t, e)| t == u && graph.label(e) == schema[i])
                }
                _ => graph.has_edge(v, u),
            };
            if !ok {
                return Err(format!("query {q}: step {i} ({v} -> {u}) is not a valid edge"));
            }
        }
    }
    Ok(())
}
