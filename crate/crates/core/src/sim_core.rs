//! Discrete-event engine: integer-millisecond clock, an event queue ordered by
//! `(time, seq)`, and seeded random streams that stay independent of each other.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Sub};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliseconds since the simulation epoch.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms)
    }

    pub const fn as_ms(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// `self - earlier`, or `None` when `earlier` is in the future.
    pub fn checked_since(self, earlier: SimTime) -> Option<u64> {
        self.0.checked_sub(earlier.0)
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, ms: u64) -> SimTime {
        SimTime(self.0 + ms)
    }
}

impl Sub<SimTime> for SimTime {
    type Output = u64;
    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    SampleCheck,
    SlotBoundary,
    ContactStart(u64),
    ContactEnd(u64),
    /// Carries a token identifying the in-flight item being delivered.
    Delivery(u64),
    HarvestTick,
    Custom(u64),
}

impl EventKind {
    fn index(self) -> usize {
        match self {
            EventKind::SampleCheck => 0,
            EventKind::SlotBoundary => 1,
            EventKind::ContactStart(_) => 2,
            EventKind::ContactEnd(_) => 3,
            EventKind::Delivery(_) => 4,
            EventKind::HarvestTick => 5,
            EventKind::Custom(_) => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("cannot schedule an event at {event} when the clock is at {clock}")]
    SchedulingInPast { event: SimTime, clock: SimTime },
}

/// Min-queue of events keyed by `(time, seq)` plus the simulation clock.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    clock: SimTime,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `kind` at `time`, assigning the next insertion sequence number.
    pub fn schedule(&mut self, time: SimTime, kind: EventKind) -> Result<u64, SimError> {
        let seq = self.next_seq;
        self.schedule_event(Event { time, seq, kind })?;
        Ok(seq)
    }

    /// Inserts a fully formed event. Auto-assigned sequence numbers always stay
    /// above any explicit `seq` seen here.
    pub fn schedule_event(&mut self, event: Event) -> Result<(), SimError> {
        if event.time < self.clock {
            return Err(SimError::SchedulingInPast {
                event: event.time,
                clock: self.clock,
            });
        }
        self.next_seq = self.next_seq.max(event.seq + 1);
        self.heap.push(Reverse(event));
        Ok(())
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    pub fn pop_next(&mut self) -> Option<Event> {
        let Reverse(event) = self.heap.pop()?;
        self.clock = event.time;
        Some(event)
    }

    /// Moves the clock forward without processing anything.
    fn advance_to(&mut self, t: SimTime) {
        if t > self.clock {
            self.clock = t;
        }
    }
}

/// Per-kind counts of processed events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub sample_check: u64,
    pub slot_boundary: u64,
    pub contact_start: u64,
    pub contact_end: u64,
    pub delivery: u64,
    pub harvest_tick: u64,
    pub custom: u64,
}

impl RunStats {
    fn record(&mut self, kind: EventKind) {
        let slot = match kind.index() {
            0 => &mut self.sample_check,
            1 => &mut self.slot_boundary,
            2 => &mut self.contact_start,
            3 => &mut self.contact_end,
            4 => &mut self.delivery,
            5 => &mut self.harvest_tick,
            _ => &mut self.custom,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        self.sample_check
            + self.slot_boundary
            + self.contact_start
            + self.contact_end
            + self.delivery
            + self.harvest_tick
            + self.custom
    }
}

/// Single-threaded event loop over an [`EventQueue`].
#[derive(Debug, Default)]
pub struct Engine {
    pub queue: EventQueue,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> SimTime {
        self.queue.clock()
    }

    /// Processes every event with `time <= t_end`, including events scheduled
    /// by the handler itself, then parks the clock at `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<RunStats, SimError>
    where
        F: FnMut(&Event, &mut EventQueue) -> Result<(), SimError>,
    {
        let mut stats = RunStats::default();
        while let Some(t) = self.queue.peek_time() {
            if t > t_end {
                break;
            }
            let event = self.queue.pop_next().expect("peeked");
            stats.record(event.kind);
            handler(&event, &mut self.queue)?;
        }
        self.queue.advance_to(t_end);
        Ok(stats)
    }
}

/// A reproducible random stream: ChaCha8 keyed by the run seed, with the
/// stream id selecting an independent keystream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Stream ids used across the crate; one per stochastic component.
pub mod streams {
    pub const SOURCE: u64 = 1;
    pub const DELAY: u64 = 2;
    pub const SAMPLER: u64 = 3;
    pub const RANDOM_ACCESS: u64 = 4;
    pub const TRAFFIC: u64 = 5;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ms: u64) -> SimTime {
        SimTime(ms)
    }

    #[test]
    fn pops_in_time_order() {
        let mut q = EventQueue::new();
        q.schedule(t(5), EventKind::Custom(5)).unwrap();
        q.schedule(t(3), EventKind::Custom(3)).unwrap();
        assert_eq!(q.pop_next().unwrap().time, t(3));
        assert_eq!(q.pop_next().unwrap().time, t(5));
    }

    #[test]
    fn ties_break_by_seq() {
        let mut q = EventQueue::new();
        q.schedule_event(Event { time: t(7), seq: 2, kind: EventKind::Custom(2) })
            .unwrap();
        q.schedule_event(Event { time: t(7), seq: 1, kind: EventKind::Custom(1) })
            .unwrap();
        assert_eq!(q.pop_next().unwrap().seq, 1);
        assert_eq!(q.pop_next().unwrap().seq, 2);
        // auto-assigned seqs continue above explicit ones
        assert_eq!(q.schedule(t(7), EventKind::SampleCheck).unwrap(), 3);
    }

    #[test]
    fn rejects_past_events() {
        let mut q = EventQueue::new();
        q.schedule(t(4), EventKind::SampleCheck).unwrap();
        q.pop_next();
        assert_eq!(
            q.schedule(t(2), EventKind::SampleCheck),
            Err(SimError::SchedulingInPast { event: t(2), clock: t(4) })
        );
        // same instant is fine
        assert!(q.schedule(t(4), EventKind::SampleCheck).is_ok());
    }

    #[test]
    fn pop_advances_clock() {
        let mut q = EventQueue::new();
        assert!(q.pop_next().is_none());
        q.schedule(t(1), EventKind::HarvestTick).unwrap();
        q.schedule(t(9), EventKind::HarvestTick).unwrap();
        assert_eq!(q.pop_next().unwrap().time, t(1));
        assert_eq!(q.clock(), t(1));
        q.pop_next();
        assert_eq!(q.clock(), t(9));
        assert!(q.pop_next().is_none());
        assert_eq!(q.clock(), t(9));
    }

    #[test]
    fn run_until_empty_parks_clock() {
        let mut engine = Engine::new();
        let stats = engine.run_until(t(100), |_, _| Ok(())).unwrap();
        assert_eq!(stats, RunStats::default());
        assert_eq!(engine.clock(), t(100));
    }

    #[test]
    fn run_until_counts_by_kind() {
        let mut engine = Engine::new();
        engine.queue.schedule(t(1), EventKind::SampleCheck).unwrap();
        engine.queue.schedule(t(2), EventKind::Delivery(0)).unwrap();
        engine.queue.schedule(t(3), EventKind::SampleCheck).unwrap();
        engine.queue.schedule(t(50), EventKind::SampleCheck).unwrap();
        let stats = engine.run_until(t(10), |_, _| Ok(())).unwrap();
        assert_eq!(stats.total(), 3);
        assert_eq!(stats.sample_check, 2);
        assert_eq!(stats.delivery, 1);
        assert_eq!(engine.queue.len(), 1);
    }

    #[test]
    fn self_scheduling_chain_is_processed() {
        let mut engine = Engine::new();
        engine.queue.schedule(t(1), EventKind::Custom(0)).unwrap();
        let stats = engine
            .run_until(t(10), |ev, q| {
                if let EventKind::Custom(n) = ev.kind {
                    if n == 0 {
                        q.schedule(ev.time + 4, EventKind::Custom(1))?;
                    }
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(stats.custom, 2);
    }

    #[test]
    fn streams_are_reproducible_and_independent() {
        let mut a = RngStream::new(42, 1);
        let mut b = RngStream::new(42, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);

        let mut other = RngStream::new(42, 2);
        let first: Vec<u64> = (0..8).map(|_| other.next_u64()).collect();
        let mut other2 = RngStream::new(42, 2);
        let mut noisy = RngStream::new(42, 1);
        for _ in 0..1000 {
            noisy.next_u64();
        }
        let second: Vec<u64> = (0..8).map(|_| other2.next_u64()).collect();
        assert_eq!(first, second);
        assert_ne!(first, xs);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = RngStream::new(7, 0);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
