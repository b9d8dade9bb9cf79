//! Continuized Nesterov acceleration.
//!
//! Two coupled iterates `x` and `z` mix through a linear ODE and take
//! gradient steps at the atoms of a Poisson point process. The ODE is
//! integrated in closed form, so the simulation is exact at every event
//! time. On top of that core the crate provides:
//!
//! * [`problems`]: quadratic and finite least-squares objectives with exact
//!   and stochastic gradient oracles, plus the constants `R²` and `κ̃`.
//! * [`continuized`]: clocks, parameter schedules, the event loop, the
//!   three-sequence discrete form, classical baselines and the Lyapunov
//!   monitor.
//! * [`graphs`]: topologies, Laplacians, effective resistances and gossip rates.
//! * [`gossip`]: naive and accelerated asynchronous randomized gossip with
//!   lazy per-node mixing.
//! * [`dual`]: accelerated asynchronous decentralized optimization on the dual.
//! * [`harness`]: experiment configs, seeded ensembles, quantiles and CSV output.

pub mod continuized;
pub mod dual;
pub mod error;
pub mod events;
pub mod gossip;
pub mod graphs;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{Sample, Snapshot, Trace};
