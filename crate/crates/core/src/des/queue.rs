//! The totally ordered event queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::time::SimTime;

/// Event type ranks. Message deliveries sort first within an instant so
/// protocol responses are consumed before timers that fire at the same
/// time, which avoids spurious timeouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum EventTypeRank {
    Delivery = 0,
    Timer = 1,
    EntryAttempt = 2,
    Exit = 3,
    FuelCheck = 4,
}

/// Ordering key: lexicographic on `(time, aircraft, rank)`, with insertion
/// sequence as the final tiebreaker (applied inside the queue).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventKey {
    pub time: SimTime,
    pub aircraft: u32,
    pub rank: EventTypeRank,
}

struct Entry<E> {
    key: EventKey,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.seq == other.seq
    }
}
impl<E> Eq for Entry<E> {}
impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop the smallest key.
        (other.key, other.seq).cmp(&(self.key, self.seq))
    }
}

/// Priority queue over opaque payloads with a stable total order.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    seq: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), seq: 0 }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: EventKey, payload: E) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Entry { key, seq, payload });
    }

    pub fn pop(&mut self) -> Option<(EventKey, E)> {
        self.heap.pop().map(|e| (e.key, e.payload))
    }

    pub fn peek_key(&self) -> Option<EventKey> {
        self.heap.peek().map(|e| e.key)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
