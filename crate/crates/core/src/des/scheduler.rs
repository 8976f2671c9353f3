//! Clock, limits, and trace plumbing around the event queue.

use thiserror::Error;

use super::queue::{EventKey, EventQueue};
use crate::time::SimTime;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("event scheduled at {at} behind the clock {now}")]
    SchedulingInThePast { at: SimTime, now: SimTime },
}

/// Stop conditions for the event loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    /// Simulated-time cap; popping an event beyond it flags a timeout.
    pub sim_time_cap: Option<SimTime>,
    /// Maximum number of processed events.
    pub event_cap: Option<u64>,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            sim_time_cap: Some(SimTime::from_secs_f64(1800.0)),
            event_cap: Some(5_000_000),
        }
    }
}

/// FNV-1a over the dispatched event stream. Two runs of the same scenario
/// must produce the same hash.
#[derive(Debug, Clone, Copy)]
pub struct TraceHasher(u64);

impl TraceHasher {
    pub fn new() -> Self {
        TraceHasher(0xcbf29ce484222325)
    }

    pub fn write_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        for &byte in bytes {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for TraceHasher {
    fn default() -> Self {
        Self::new()
    }
}

/// One row of the optional event log export.
#[derive(Debug, Clone)]
pub struct EventLogRecord {
    pub time: SimTime,
    pub aircraft: u32,
    pub kind: &'static str,
    pub detail: String,
}

/// Clock plus queue plus run limits.
pub struct Scheduler<E> {
    queue: EventQueue<E>,
    now: SimTime,
    processed: u64,
    pub timed_out: bool,
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler { queue: EventQueue::new(), now: SimTime::ZERO, processed: 0, timed_out: false }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Enqueues an event; scheduling behind the clock is a fatal ordering
    /// error.
    pub fn schedule(&mut self, key: EventKey, payload: E) -> Result<(), SchedulerError> {
        if key.time < self.now {
            return Err(SchedulerError::SchedulingInThePast { at: key.time, now: self.now });
        }
        self.queue.push(key, payload);
        Ok(())
    }

    /// Pops the next event and advances the clock, honoring `limits`.
    /// Returns `None` at quiescence or when a limit trips (which sets the
    /// timeout flag).
    pub fn next(&mut self, limits: &RunLimits) -> Option<(EventKey, E)> {
        let key = self.queue.peek_key()?;
        if let Some(cap) = limits.sim_time_cap {
            if key.time > cap {
                self.timed_out = true;
                return None;
            }
        }
        if let Some(cap) = limits.event_cap {
            if self.processed >= cap {
                self.timed_out = true;
                return None;
            }
        }
        let (key, payload) = self.queue.pop().expect("peeked");
        debug_assert!(key.time >= self.now, "event order audit");
        self.now = key.time;
        self.processed += 1;
        Some((key, payload))
    }
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::EventTypeRank;

    fn key(t: u64) -> EventKey {
        EventKey { time: SimTime(t), aircraft: 0, rank: EventTypeRank::Timer }
    }

    #[test]
    fn empty_queue_is_quiescent() {
        let mut s: Scheduler<()> = Scheduler::new();
        assert!(s.next(&RunLimits::default()).is_none());
        assert!(!s.timed_out);
    }

    #[test]
    fn scheduling_in_the_past_is_fatal() {
        let mut s: Scheduler<u32> = Scheduler::new();
        s.schedule(key(10), 1).unwrap();
        assert!(s.next(&RunLimits::default()).is_some());
        let err = s.schedule(key(5), 2).unwrap_err();
        assert!(matches!(err, SchedulerError::SchedulingInThePast { .. }));
    }

    #[test]
    fn event_cap_sets_timeout_flag() {
        let mut s: Scheduler<u32> = Scheduler::new();
        for i in 0..10 {
            s.schedule(key(i), i as u32).unwrap();
        }
        let limits = RunLimits { sim_time_cap: None, event_cap: Some(3) };
        let mut n = 0;
        while s.next(&limits).is_some() {
            n += 1;
        }
        assert_eq!(n, 3);
        assert!(s.timed_out);
    }

    #[test]
    fn time_cap_sets_timeout_flag() {
        let mut s: Scheduler<u32> = Scheduler::new();
        s.schedule(key(1_000), 1).unwrap();
        s.schedule(key(2_000_000_000_000_000), 2).unwrap();
        let limits = RunLimits { sim_time_cap: Some(SimTime::from_secs_f64(1800.0)), event_cap: None };
        assert!(s.next(&limits).is_some());
        assert!(s.next(&limits).is_none());
        assert!(s.timed_out);
    }
}
