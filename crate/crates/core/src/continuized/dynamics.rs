use nalgebra::DVector;

use crate::error::{Error, Result};

use super::schedule::{Mixing, ParamSchedule};
use super::CoupledState;

/// Integrates the mixing ODE from `state.t` to `until` in closed form.
///
/// Vanishing mixing keeps `z` fixed and contracts `x − z` by `(t₀/t)²`; from
/// `t₀ = 0` this sends `x` straight onto `z`. Constant mixing keeps the
/// midpoint and contracts `x − z` by `e^{−2cΔ}`.
pub fn mix_in_place(state: &mut CoupledState, schedule: &ParamSchedule, until: f64) -> Result<()> {
    let from = state.t;
    if !(until >= from) {
        return Err(Error::InvalidInterval { from, to: until });
    }
    if until == from {
        return Ok(());
    }
    match schedule.mixing() {
        Mixing::Vanishing => {
            let r = (from / until).powi(2);
            state.x.zip_apply(&state.z, |x, z| *x = z + r * (*x - z));
        }
        Mixing::Constant(c) => {
            let decay = (-2.0 * c * (until - from)).exp();
            for (x, z) in state.x.iter_mut().zip(state.z.iter_mut()) {
                let m = 0.5 * (*x + *z);
                let half = 0.5 * (*x - *z) * decay;
                *x = m + half;
                *z = m - half;
            }
        }
    }
    state.t = until;
    Ok(())
}

pub fn mix_closed_form(state: &CoupledState, schedule: &ParamSchedule, until: f64) -> Result<CoupledState> {
    let mut out = state.clone();
    mix_in_place(&mut out, schedule, until)?;
    Ok(out)
}

/// `x ← x − γ̃·extra·g`, `z ← z − γ̃'·g`, one more event.
pub fn gradient_jump(
    state: &CoupledState,
    gamma: f64,
    gamma_prime: f64,
    g: &DVector<f64>,
    extra_x_factor: f64,
) -> Result<CoupledState> {
    let mut out = state.clone();
    jump_in_place(&mut out, gamma, gamma_prime, g, extra_x_factor)?;
    Ok(out)
}

pub(crate) fn jump_in_place(
    state: &mut CoupledState,
    gamma: f64,
    gamma_prime: f64,
    g: &DVector<f64>,
    extra_x_factor: f64,
) -> Result<()> {
    if g.len() != state.dimension() {
        return Err(Error::DimensionMismatch { expected: state.dimension(), got: g.len() });
    }
    state.x.axpy(-gamma * extra_x_factor, g, 1.0);
    state.z.axpy(-gamma_prime, g, 1.0);
    state.event_count += 1;
    Ok(())
}
