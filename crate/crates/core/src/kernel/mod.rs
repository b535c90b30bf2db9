//! Deterministic discrete-event engine.
//!
//! Events are delivered in `(fire_time, sequence_id)` order. Sequence ids are
//! handed out at scheduling time, so two events scheduled for the same instant
//! fire in the order they were scheduled.

mod metrics;
mod rng;

pub use metrics::{MetricError, MetricSeries};
pub use rng::RngStream;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Simulated time in seconds.
pub type SimTime = f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("event scheduled at t={at} s but the clock is already at t={now} s")]
    ScheduleInPast { at: SimTime, now: SimTime },
    #[error("run_until({t_end}) requested but the clock is already at t={now} s")]
    RunBackwards { t_end: SimTime, now: SimTime },
    #[error("non-finite event time {0}")]
    NonFiniteTime(SimTime),
}

/// A delivered event.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<E> {
    pub fire_time: SimTime,
    pub sequence_id: u64,
    pub kind: E,
}

struct Queued<E>(SimEvent<E>);

impl<E> PartialEq for Queued<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Queued<E> {}

impl<E> PartialOrd for Queued<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Queued<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first.
        other
            .0
            .fire_time
            .total_cmp(&self.0.fire_time)
            .then_with(|| other.0.sequence_id.cmp(&self.0.sequence_id))
    }
}

/// Single-threaded event loop. Each simulation run owns one.
pub struct Kernel<E> {
    now: SimTime,
    next_sequence: u64,
    queue: BinaryHeap<Queued<E>>,
    delivered: u64,
}

impl<E> Default for Kernel<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Kernel<E> {
    pub fn new() -> Self {
        Self {
            now: 0.0,
            next_sequence: 0,
            queue: BinaryHeap::new(),
            delivered: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Number of events handed out so far.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Enqueues `kind` to fire at `at`. Returns the assigned sequence id.
    pub fn schedule(&mut self, at: SimTime, kind: E) -> Result<u64, KernelError> {
        if !at.is_finite() {
            return Err(KernelError::NonFiniteTime(at));
        }
        if at < self.now {
            return Err(KernelError::ScheduleInPast { at, now: self.now });
        }
        let sequence_id = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Queued(SimEvent {
            fire_time: at,
            sequence_id,
            kind,
        }));
        Ok(sequence_id)
    }

    /// Schedules `kind` after a non-negative delay relative to the clock.
    pub fn schedule_in(&mut self, delay: SimTime, kind: E) -> Result<u64, KernelError> {
        self.schedule(self.now + delay, kind)
    }

    /// Pops the next event if it fires no later than `t_end`, advancing the clock to it.
    pub fn next_until(&mut self, t_end: SimTime) -> Option<SimEvent<E>> {
        match self.queue.peek() {
            Some(head) if head.0.fire_time <= t_end => {}
            _ => return None,
        }
        let Queued(ev) = self.queue.pop()?;
        self.now = ev.fire_time;
        self.delivered += 1;
        Some(ev)
    }

    /// Processes every event with `fire_time <= t_end`, then sets the clock to `t_end`.
    ///
    /// The handler receives the kernel so it can schedule follow-up events.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<(), KernelError>
    where
        F: FnMut(&mut Self, SimEvent<E>),
    {
        if t_end < self.now {
            return Err(KernelError::RunBackwards {
                t_end,
                now: self.now,
            });
        }
        while let Some(ev) = self.next_until(t_end) {
            handler(self, ev);
        }
        self.now = t_end;
        Ok(())
    }

    /// Processes events until the queue drains. The clock stays at the last event.
    pub fn run_to_completion<F>(&mut self, mut handler: F)
    where
        F: FnMut(&mut Self, SimEvent<E>),
    {
        while let Some(ev) = self.next_until(SimTime::INFINITY) {
            handler(self, ev);
        }
    }
}
