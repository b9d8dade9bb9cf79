//! Continuized acceleration: two iterates that mix through a linear ODE and
//! take gradient steps at the event times of a Poisson (or geometric) clock.

mod baselines;
mod clock;
mod dynamics;
mod lyapunov;
mod runner;
mod schedule;

use nalgebra::DVector;

pub use baselines::{nesterov_a_sequence, run_gd, run_nesterov, NesterovVariant};
pub use clock::{sample_interarrival, EventClock};
pub use dynamics::{gradient_jump, mix_closed_form, mix_in_place};
pub use lyapunov::{lyapunov_value, LyapunovCoeffs, LyapunovNorm};
pub use runner::{replay_continuized, run_continuized, three_sequence, RunOptions, METRICS};
pub use schedule::{discrete_params, schedule_eval, DiscreteParams, Mixing, ParamSchedule, Params, ScheduleKind};

/// The iterate pair `(x_t, z_t)` at time `t`, after `event_count` jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub t: f64,
    pub event_count: u64,
}

impl CoupledState {
    pub fn new(x: DVector<f64>, z: DVector<f64>) -> Self {
        debug_assert_eq!(x.len(), z.len());
        CoupledState { x, z, t: 0.0, event_count: 0 }
    }

    pub fn dimension(&self) -> usize {
        self.x.len()
    }
}
