//! Per-link packet queues.
//!
//! Each scheduling discipline gets the storage its selection rule needs:
//! FCFS a deque, LCFS a stack, the freshest-first family a max-heap keyed by
//! `(s, index)`, and the randomized baseline a bag with O(1) removal. The
//! eviction rule on overflow is intrinsic to the discipline: the
//! freshest-first and LCFS queues drop the stalest packet when a fresher one
//! needs the space, FCFS and the randomized baseline drop the arrival.
//! "Stalest" and "freshest" order by `(s, index)` so ties on generation time
//! resolve toward the higher packet index.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;

use crate::rng::RngStream;

/// A packet as held by link queues: just its identity and generation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedPacket {
    pub index: u32,
    pub s: f64,
}

impl QueuedPacket {
    /// Freshness key: ties on generation time go to the higher index.
    fn key(&self) -> (f64, u32) {
        (self.s, self.index)
    }
}

fn key_cmp(a: &QueuedPacket, b: &QueuedPacket) -> Ordering {
    a.s.total_cmp(&b.s).then(a.index.cmp(&b.index))
}

#[derive(Debug, Clone)]
pub struct FreshEntry(QueuedPacket);

impl PartialEq for FreshEntry {
    fn eq(&self, other: &Self) -> bool {
        key_cmp(&self.0, &other.0) == Ordering::Equal
    }
}
impl Eq for FreshEntry {}
impl PartialOrd for FreshEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FreshEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        key_cmp(&self.0, &other.0)
    }
}

/// Discipline-shaped queue storage.
#[derive(Debug, Clone)]
pub enum LinkQueue {
    /// Serve the earliest enqueued packet.
    Fifo(VecDeque<QueuedPacket>),
    /// Serve the most recently enqueued packet.
    Lifo(Vec<QueuedPacket>),
    /// Serve the packet with the greatest `(s, index)`.
    Freshest(BinaryHeap<FreshEntry>),
    /// Serve a uniformly random packet.
    Bag(Vec<QueuedPacket>),
}

impl LinkQueue {
    pub fn fifo() -> Self {
        LinkQueue::Fifo(VecDeque::new())
    }

    pub fn lifo() -> Self {
        LinkQueue::Lifo(Vec::new())
    }

    pub fn freshest() -> Self {
        LinkQueue::Freshest(BinaryHeap::new())
    }

    pub fn bag() -> Self {
        LinkQueue::Bag(Vec::new())
    }

    pub fn len(&self) -> usize {
        match self {
            LinkQueue::Fifo(q) => q.len(),
            LinkQueue::Lifo(q) | LinkQueue::Bag(q) => q.len(),
            LinkQueue::Freshest(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Append a packet. Capacity is not checked here; overflow is resolved
    /// by [`LinkQueue::trim`] once all same-instant arrivals are in.
    pub fn push(&mut self, p: QueuedPacket) {
        match self {
            LinkQueue::Fifo(q) => q.push_back(p),
            LinkQueue::Lifo(q) | LinkQueue::Bag(q) => q.push(p),
            LinkQueue::Freshest(q) => q.push(FreshEntry(p)),
        }
    }

    /// Remove and return the packet the discipline serves next.
    pub fn select_remove(&mut self, stream: &mut RngStream) -> Option<QueuedPacket> {
        match self {
            LinkQueue::Fifo(q) => q.pop_front(),
            LinkQueue::Lifo(q) => q.pop(),
            LinkQueue::Freshest(q) => q.pop().map(|e| e.0),
            LinkQueue::Bag(q) => {
                if q.is_empty() {
                    None
                } else {
                    let i = stream.next_rng().random_range(0..q.len());
                    Some(q.swap_remove(i))
                }
            }
        }
    }

    /// The packet with the greatest `(s, index)`, if any.
    pub fn peek_freshest(&self) -> Option<QueuedPacket> {
        match self {
            LinkQueue::Freshest(q) => q.peek().map(|e| e.0),
            LinkQueue::Fifo(q) => q.iter().max_by(|a, b| key_cmp(a, b)).copied(),
            LinkQueue::Lifo(q) | LinkQueue::Bag(q) => {
                q.iter().max_by(|a, b| key_cmp(a, b)).copied()
            }
        }
    }

    /// The packet with the smallest `(s, index)`, if any.
    pub fn peek_stalest(&self) -> Option<QueuedPacket> {
        match self {
            LinkQueue::Freshest(q) => q.iter().map(|e| e.0).min_by(key_cmp),
            LinkQueue::Fifo(q) => q.iter().min_by(|a, b| key_cmp(a, b)).copied(),
            LinkQueue::Lifo(q) | LinkQueue::Bag(q) => {
                q.iter().min_by(|a, b| key_cmp(a, b)).copied()
            }
        }
    }

    /// Whether a full queue would make room for `p` by evicting its stalest
    /// packet. Only the freshness-ordered disciplines evict; the others
    /// drop the arrival.
    pub fn evicts_for(&self, p: &QueuedPacket) -> bool {
        match self {
            LinkQueue::Lifo(_) | LinkQueue::Freshest(_) => self
                .peek_stalest()
                .map(|st| st.key() < p.key())
                .unwrap_or(false),
            LinkQueue::Fifo(_) | LinkQueue::Bag(_) => false,
        }
    }

    /// Enforce the capacity, returning dropped packets (in drop order).
    pub fn trim(&mut self, capacity: &crate::model::Buffer) -> Vec<QueuedPacket> {
        let mut dropped = Vec::new();
        while !capacity.holds(self.len()) {
            let victim = match self {
                // These disciplines shed the stalest content.
                LinkQueue::Lifo(_) | LinkQueue::Freshest(_) => self.remove_stalest(),
                // These drop the most recent arrival.
                LinkQueue::Fifo(q) => q.pop_back(),
                LinkQueue::Bag(q) => q.pop(),
            };
            match victim {
                Some(v) => dropped.push(v),
                None => break,
            }
        }
        dropped
    }

    fn remove_stalest(&mut self) -> Option<QueuedPacket> {
        match self {
            LinkQueue::Lifo(q) => {
                let pos = q
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| key_cmp(a, b))
                    .map(|(i, _)| i)?;
                Some(q.remove(pos))
            }
            LinkQueue::Freshest(q) => {
                let mut entries: Vec<QueuedPacket> = q.drain().map(|e| e.0).collect();
                let pos = entries
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| key_cmp(a, b))
                    .map(|(i, _)| i)?;
                let victim = entries.swap_remove(pos);
                *q = entries.into_iter().map(FreshEntry).collect();
                Some(victim)
            }
            LinkQueue::Fifo(_) | LinkQueue::Bag(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Buffer;
    use crate::rng::{RngStream, StreamId, StreamPurpose};

    fn qp(index: u32, s: f64) -> QueuedPacket {
        QueuedPacket { index, s }
    }

    fn stream() -> RngStream {
        RngStream::new(0, StreamId::global(StreamPurpose::PolicyChoice))
    }

    #[test]
    fn freshest_pops_max_s_with_index_tiebreak() {
        let mut q = LinkQueue::Freshest(BinaryHeap::new());
        q.push(qp(1, 1.0));
        q.push(qp(2, 4.0));
        q.push(qp(3, 2.0));
        q.push(qp(4, 4.0));
        let first = q.select_remove(&mut stream()).unwrap();
        assert_eq!(first.index, 4); // s tie resolved to higher index
        assert_eq!(q.select_remove(&mut stream()).unwrap().index, 2);
    }

    #[test]
    fn fifo_serves_in_arrival_order() {
        let mut q = LinkQueue::Fifo(VecDeque::new());
        q.push(qp(1, 4.0));
        q.push(qp(2, 1.0));
        assert_eq!(q.select_remove(&mut stream()).unwrap().index, 1);
        assert_eq!(q.select_remove(&mut stream()).unwrap().index, 2);
    }

    #[test]
    fn lifo_serves_most_recent() {
        let mut q = LinkQueue::Lifo(Vec::new());
        q.push(qp(1, 4.0));
        q.push(qp(2, 1.0));
        assert_eq!(q.select_remove(&mut stream()).unwrap().index, 2);
    }

    #[test]
    fn trim_evicts_stalest_for_freshness_disciplines() {
        let mut q = LinkQueue::Freshest(BinaryHeap::new());
        q.push(qp(1, 3.0));
        q.push(qp(2, 1.0));
        q.push(qp(3, 2.0));
        let dropped = q.trim(&Buffer::Finite(2));
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].index, 2);
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn trim_drops_newest_for_fifo() {
        let mut q = LinkQueue::Fifo(VecDeque::new());
        q.push(qp(1, 1.0));
        q.push(qp(2, 9.0));
        let dropped = q.trim(&Buffer::Finite(1));
        assert_eq!(dropped[0].index, 2);
        assert_eq!(q.peek_freshest().unwrap().index, 1);
    }

    #[test]
    fn bag_selection_is_deterministic_for_a_seed() {
        let mut a = LinkQueue::Bag(Vec::new());
        let mut b = LinkQueue::Bag(Vec::new());
        for i in 0..5 {
            a.push(qp(i, i as f64));
            b.push(qp(i, i as f64));
        }
        let mut sa = stream();
        let mut sb = stream();
        for _ in 0..5 {
            assert_eq!(
                a.select_remove(&mut sa).unwrap().index,
                b.select_remove(&mut sb).unwrap().index
            );
        }
    }
}
