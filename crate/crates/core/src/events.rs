//! Sources of marked event times `(T_k, mark_k)`.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;

use crate::continuized::EventClock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub mark: usize,
}

pub trait EventSource {
    /// Next event strictly after the previous one; `None` when exhausted.
    fn next_event(&mut self) -> Option<Event>;
}

/// Marked Poisson process with intensity `rate · dt ⊗ P`.
pub struct PoissonMarks<'a, R> {
    clock: EventClock,
    marks: &'a WeightedIndex<f64>,
    rng: R,
    t: f64,
}

impl<'a, R: Rng> PoissonMarks<'a, R> {
    pub fn new(clock: EventClock, marks: &'a WeightedIndex<f64>, rng: R) -> Self {
        PoissonMarks { clock, marks, rng, t: 0.0 }
    }
}

impl<R: Rng> EventSource for PoissonMarks<'_, R> {
    fn next_event(&mut self) -> Option<Event> {
        self.t += self.clock.sample_interarrival(&mut self.rng);
        let mark = self.marks.sample(&mut self.rng);
        Some(Event { t: self.t, mark })
    }
}

/// Replays a recorded event list.
pub struct Replay<'a> {
    events: std::slice::Iter<'a, Event>,
}

impl<'a> Replay<'a> {
    pub fn new(events: &'a [Event]) -> Self {
        Replay { events: events.iter() }
    }
}

impl EventSource for Replay<'_> {
    fn next_event(&mut self) -> Option<Event> {
        self.events.next().copied()
    }
}

/// Draws events from `source` until the first one past `horizon`.
pub fn record<S: EventSource>(source: &mut S, horizon: f64) -> Vec<Event> {
    let mut out = Vec::new();
    while let Some(e) = source.next_event() {
        if e.t > horizon {
            break;
        }
        out.push(e);
    }
    out
}
