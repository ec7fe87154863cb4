use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::graph::VertexId;

/// Start vertices of one batch, handed out through an atomic head cursor.
#[derive(Debug)]
pub struct GlobalPool<'s> {
    starts: &'s [VertexId],
    first_id: u64,
    cursor: AtomicUsize,
}

impl<'s> GlobalPool<'s> {
    /// `first_id` is the query id of `starts[0]`.
    pub fn new(starts: &'s [VertexId], first_id: u64) -> Self {
        GlobalPool {
            starts,
            first_id,
            cursor: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn first_id(&self) -> u64 {
        self.first_id
    }

    /// Claims up to `want` queries. Concurrent callers never receive the same
    /// query; an empty result means the pool is drained.
    pub fn fetch(&self, want: usize) -> Fetched<'s> {
        let len = self.starts.len();
        let range = if want == 0 || self.cursor.load(Ordering::Relaxed) >= len {
            len..len
        } else {
            let begin = self.cursor.fetch_add(want, Ordering::Relaxed).min(len);
            begin..(begin + want).min(len)
        };
        Fetched {
            starts: self.starts,
            first_id: self.first_id,
            range,
        }
    }

    pub fn remaining(&self) -> usize {
        self.starts
            .len()
            .saturating_sub(self.cursor.load(Ordering::Relaxed))
    }
}

/// A claimed run of queries, yielded as `(query_id, start_vertex)`.
#[derive(Debug, Clone)]
pub struct Fetched<'s> {
    starts: &'s [VertexId],
    first_id: u64,
    range: Range<usize>,
}

impl Fetched<'_> {
    /// Positions within the batch.
    pub fn positions(&self) -> Range<usize> {
        self.range.clone()
    }
}

impl Iterator for Fetched<'_> {
    type Item = (u64, VertexId);

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.range.next()?;
        Some((self.first_id + i as u64, self.starts[i]))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.range.size_hint()
    }
}

impl ExactSizeIterator for Fetched<'_> {}
