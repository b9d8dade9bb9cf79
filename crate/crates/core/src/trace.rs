//! Time-stamped metric samples from one run.

use nalgebra::DVector;

use crate::continuized::CoupledState;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Number of events processed up to and including `t`.
    pub k: u64,
    /// One value per entry of [`Trace::metrics`].
    pub values: Vec<f64>,
    /// Whether `t` belongs to the requested checkpoint grid.
    pub checkpoint: bool,
    /// Whether the sample was taken right after a jump.
    pub event: bool,
}

/// Iterates at an event: `x̃_k`, `z̃_k` after the jump and `ỹ_{k−1}` before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub k: u64,
    pub pre_jump_x: DVector<f64>,
    pub x: DVector<f64>,
    pub z: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub metrics: Vec<String>,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub terminal_state: CoupledState,
}

impl Trace {
    pub fn new(metrics: &[&str], initial: CoupledState) -> Self {
        Trace {
            metrics: metrics.iter().map(|m| m.to_string()).collect(),
            samples: Vec::new(),
            snapshots: Vec::new(),
            terminal_state: initial,
        }
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metrics.iter().position(|m| m == name)
    }

    /// Appends a sample, merging it into the previous one when the time
    /// coincides (keeps sample times strictly increasing).
    pub fn push(&mut self, sample: Sample) {
        if let Some(last) = self.samples.last_mut() {
            debug_assert!(sample.t >= last.t, "samples must be time-ordered");
            if sample.t == last.t {
                last.checkpoint |= sample.checkpoint;
                last.event |= sample.event;
                last.k = sample.k;
                last.values = sample.values;
                return;
            }
        }
        self.samples.push(sample);
    }

    pub fn checkpoints(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.checkpoint)
    }

    pub fn events(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.event)
    }

    /// `(t, value)` pairs of one metric on the checkpoint grid.
    pub fn checkpoint_series(&self, metric: &str) -> Vec<(f64, f64)> {
        let Some(i) = self.metric_index(metric) else {
            return Vec::new();
        };
        self.checkpoints().map(|s| (s.t, s.values[i])).collect()
    }
}
