use rand::Rng;

use crate::error::{Error, Result};

/// Waiting-time law between gradient steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventClock {
    Exponential { rate: f64 },
    /// Coin flips every `tick` time units, each succeeding with probability `p`.
    /// `p = 1, tick = 1` is the classical discrete iteration; `tick = p → 0`
    /// approaches the unit-rate exponential clock.
    Geometric { p: f64, tick: f64 },
}

impl Default for EventClock {
    fn default() -> Self {
        EventClock::Exponential { rate: 1.0 }
    }
}

impl EventClock {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidSchedule(format!("clock rate must be positive, got {rate}")));
        }
        Ok(EventClock::Exponential { rate })
    }

    pub fn geometric(p: f64, tick: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidSchedule(format!("geometric clock needs p in (0, 1], got {p}")));
        }
        if !(tick > 0.0 && tick.is_finite()) {
            return Err(Error::InvalidSchedule(format!("geometric clock needs a positive tick, got {tick}")));
        }
        Ok(EventClock::Geometric { p, tick })
    }

    /// Inverse-transform sample from a uniform `u ∈ (0, 1]`.
    pub fn interarrival_from_uniform(&self, u: f64) -> f64 {
        match *self {
            EventClock::Exponential { rate } => -u.ln() / rate,
            EventClock::Geometric { p, tick } => {
                // Trials up to and including the first success.
                let trials = if p >= 1.0 { 1.0 } else { (u.ln() / (1.0 - p).ln()).ceil().max(1.0) };
                tick * trials
            }
        }
    }

    pub fn sample_interarrival<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // random() is in [0, 1); flip it to (0, 1] so ln never sees 0.
        let u = 1.0 - rng.random::<f64>();
        self.interarrival_from_uniform(u)
    }

    pub fn mean_interarrival(&self) -> f64 {
        match *self {
            EventClock::Exponential { rate } => 1.0 / rate,
            EventClock::Geometric { p, tick } => tick / p,
        }
    }
}

pub fn sample_interarrival<R: Rng + ?Sized>(clock: &EventClock, rng: &mut R) -> f64 {
    clock.sample_interarrival(rng)
}
