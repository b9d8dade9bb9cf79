use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::events::{Event, EventSource, Replay};
use crate::problems::{stochastic_gradient, ConvexProblem, NoiseModel};
use crate::rng::{stream, CLOCK_STREAM, NOISE_STREAM};
use crate::trace::{Sample, Snapshot, Trace};

use super::clock::EventClock;
use super::dynamics::{jump_in_place, mix_in_place};
use super::lyapunov::lyapunov_value;
use super::schedule::{ParamSchedule, ScheduleKind};
use super::CoupledState;

/// Metrics recorded by [`run_continuized`]: `f(x_t) − f_*`, `‖x_t − x_*‖²`
/// and the Lyapunov potential `φ_t`.
pub const METRICS: [&str; 3] = ["gap", "dist2", "lyapunov"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub horizon: f64,
    pub x0: DVector<f64>,
    /// Defaults to `x0`.
    pub z0: Option<DVector<f64>>,
    /// Strictly increasing sample times; those past the horizon are ignored.
    pub checkpoints: Vec<f64>,
    /// Also sample the metrics right after every jump.
    pub record_events: bool,
    pub record_snapshots: bool,
}

impl RunOptions {
    pub fn new(horizon: f64, x0: DVector<f64>) -> Self {
        RunOptions { horizon, x0, z0: None, checkpoints: Vec::new(), record_events: false, record_snapshots: false }
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<f64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_events(mut self) -> Self {
        self.record_events = true;
        self
    }

    pub fn with_snapshots(mut self) -> Self {
        self.record_snapshots = true;
        self
    }
}

fn metrics(problem: &ConvexProblem, schedule: &ParamSchedule, state: &CoupledState) -> Result<Vec<f64>> {
    let gap = problem.gap(&state.x);
    let dist2 = (&state.x - problem.optimum()).norm_squared();
    let phi = lyapunov_value(state, &schedule.lyapunov_coeffs(state.t), problem)?;
    Ok(vec![gap, dist2, phi])
}

fn validate_checkpoints(checkpoints: &[f64]) -> Result<()> {
    if checkpoints.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidInterval { from: 0.0, to: f64::NAN });
    }
    if let Some(w) = checkpoints.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInterval { from: w[0], to: w[1] });
    }
    Ok(())
}

/// Simulates the continuized process up to `opts.horizon`.
///
/// Between events the iterates follow the mixing ODE in closed form; at each
/// event `T` the gradient is taken at the left limit `x_{T−}` and the jump
/// uses `γ'_T`. Checkpoints are sampled on a mixed copy so they never
/// perturb the trajectory. Event times come from stream 0 of `seed`,
/// gradient noise and coordinate draws from stream 1.
pub fn run_continuized(
    problem: &ConvexProblem,
    noise: &NoiseModel,
    schedule: &ParamSchedule,
    clock: &EventClock,
    opts: &RunOptions,
    seed: u64,
) -> Result<Trace> {
    noise.validate()?;
    check_inputs(problem, opts)?;
    let d = problem.dimension();
    let coordinates = match schedule.coordinate_probs() {
        Some(probs) => {
            if probs.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: probs.len() });
            }
            if *noise != NoiseModel::None {
                return Err(Error::NoiseMismatch("coordinate descent uses exact partial derivatives".into()));
            }
            Some((probs, WeightedIndex::new(probs).map_err(|e| Error::InvalidSchedule(e.to_string()))?))
        }
        None => None,
    };

    let mut noise_rng = stream(seed, NOISE_STREAM);
    let mut events = ClockEvents { clock, rng: stream(seed, CLOCK_STREAM), t: 0.0 };
    simulate(problem, schedule, opts, &mut events, |y, _| match &coordinates {
        Some((probs, sampler)) => {
            let i = sampler.sample(&mut noise_rng);
            Ok(coordinate_gradient(problem, probs, y, i))
        }
        None => Ok((stochastic_gradient(problem, noise, y, &mut noise_rng)?, 1.0)),
    })
}

/// Replays the noiseless-oracle dynamics on a fixed list of marked events.
/// The mark selects the coordinate for coordinate schedules and the sample
/// (multiplicative noise) otherwise.
pub fn replay_continuized(
    problem: &ConvexProblem,
    schedule: &ParamSchedule,
    opts: &RunOptions,
    events: &[Event],
) -> Result<Trace> {
    check_inputs(problem, opts)?;
    let d = problem.dimension();
    match schedule.coordinate_probs() {
        Some(probs) => {
            if let Some(e) = events.iter().find(|e| e.mark >= d) {
                return Err(Error::DimensionMismatch { expected: d, got: e.mark + 1 });
            }
            simulate(problem, schedule, opts, &mut Replay::new(events), |y, i| {
                Ok(coordinate_gradient(problem, probs, y, i))
            })
        }
        None => {
            let ls = problem.as_least_squares().ok_or_else(|| {
                Error::NoiseMismatch("replayed marks select least-squares samples".into())
            })?;
            if let Some(e) = events.iter().find(|e| e.mark >= ls.samples().len()) {
                return Err(Error::InvalidProblem(format!("event mark {} has no sample", e.mark)));
            }
            simulate(problem, schedule, opts, &mut Replay::new(events), |y, i| Ok((ls.sample_gradient(y, i), 1.0)))
        }
    }
}

/// `g = (1/Pᵢ) eᵢ ∂ᵢf(y)` with the extra `1/Pᵢ` on the x-step.
fn coordinate_gradient(problem: &ConvexProblem, probs: &[f64], y: &DVector<f64>, i: usize) -> (DVector<f64>, f64) {
    let mut g = DVector::zeros(y.len());
    g[i] = problem.gradient_unchecked(y)[i] / probs[i];
    (g, 1.0 / probs[i])
}

struct ClockEvents<'a> {
    clock: &'a EventClock,
    rng: ChaCha8Rng,
    t: f64,
}

impl EventSource for ClockEvents<'_> {
    fn next_event(&mut self) -> Option<Event> {
        self.t += self.clock.sample_interarrival(&mut self.rng);
        Some(Event { t: self.t, mark: 0 })
    }
}

fn check_inputs(problem: &ConvexProblem, opts: &RunOptions) -> Result<()> {
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidInterval { from: 0.0, to: opts.horizon });
    }
    let d = problem.dimension();
    for v in std::iter::once(&opts.x0).chain(opts.z0.as_ref()) {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    validate_checkpoints(&opts.checkpoints)
}

fn simulate<S, G>(
    problem: &ConvexProblem,
    schedule: &ParamSchedule,
    opts: &RunOptions,
    events: &mut S,
    mut grad: G,
) -> Result<Trace>
where
    S: EventSource,
    G: FnMut(&DVector<f64>, usize) -> Result<(DVector<f64>, f64)>,
{
    let z0 = opts.z0.clone().unwrap_or_else(|| opts.x0.clone());
    let mut state = CoupledState::new(opts.x0.clone(), z0);
    let mut trace = Trace::new(&METRICS, state.clone());
    let mut pending = opts.checkpoints.iter().copied().filter(|t| *t <= opts.horizon).peekable();

    loop {
        let next = events.next_event();
        let t_next = next.map_or(f64::INFINITY, |e| e.t);
        while let Some(&tc) = pending.peek() {
            if tc >= t_next {
                break;
            }
            let mut probe = state.clone();
            mix_in_place(&mut probe, schedule, tc)?;
            let values = metrics(problem, schedule, &probe)?;
            trace.push(Sample { t: tc, k: state.event_count, values, checkpoint: true, event: false });
            pending.next();
        }
        let Some(event) = next.filter(|e| e.t <= opts.horizon) else {
            break;
        };
        mix_in_place(&mut state, schedule, event.t)?;
        let y = state.x.clone();
        let (gamma, gamma_prime) = schedule.step_sizes(event.t);
        let (g, extra) = grad(&y, event.mark)?;
        jump_in_place(&mut state, gamma, gamma_prime, &g, extra)?;

        let at_checkpoint = pending.peek() == Some(&event.t);
        if at_checkpoint {
            pending.next();
        }
        if opts.record_events || at_checkpoint {
            let values = metrics(problem, schedule, &state)?;
            trace.push(Sample {
                t: event.t,
                k: state.event_count,
                values,
                checkpoint: at_checkpoint,
                event: opts.record_events,
            });
        }
        if opts.record_snapshots {
            trace.snapshots.push(Snapshot {
                t: event.t,
                k: state.event_count,
                pre_jump_x: y,
                x: state.x.clone(),
                z: state.z.clone(),
            });
        }
    }

    mix_in_place(&mut state, schedule, opts.horizon)?;
    trace.terminal_state = state;
    Ok(trace)
}

/// The three-sequence recursion with exact gradients on the given event times
/// (`T₀ = 0`):
///
/// `y_k = x_k + τ_k(z_k − x_k)`, `x_{k+1} = y_k − γ̃_k ∇f(y_k)`,
/// `z_{k+1} = z_k + τ'_k(y_k − z_k) − γ̃'_k ∇f(y_k)`.
pub fn three_sequence(
    problem: &ConvexProblem,
    schedule: &ParamSchedule,
    x0: &DVector<f64>,
    z0: &DVector<f64>,
    times: &[f64],
) -> Result<Vec<Snapshot>> {
    if schedule.kind() == ScheduleKind::Coordinate {
        return Err(Error::InvalidSchedule("the recursion uses full gradients".into()));
    }
    let (mut x, mut z) = (x0.clone(), z0.clone());
    let mut t_k = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for (k, &t_next) in times.iter().enumerate() {
        let p = schedule.discrete(t_k, t_next)?;
        let y = &x + (&z - &x) * p.tau;
        let g = problem.gradient(&y)?;
        x = &y - &g * p.gamma;
        z = &z + (&y - &z) * p.tau_prime - &g * p.gamma_prime;
        out.push(Snapshot { t: t_next, k: k as u64 + 1, pre_jump_x: y, x: x.clone(), z: z.clone() });
        t_k = t_next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic, three_scale_quadratic};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn first_convex_step_matches_hand_unrolling() {
        let p = make_quadratic(vec![1.0, 0.5], vec![1.0, -1.0]).unwrap();
        let s = ParamSchedule::convex(1.0).unwrap();
        let opts = RunOptions::new(50.0, dv(&[0.0, 0.0])).with_snapshots();
        let trace = run_continuized(&p, &NoiseModel::None, &s, &EventClock::default(), &opts, 3).unwrap();
        let first = &trace.snapshots[0];
        let t1 = first.t;
        // ỹ₀ = x₀ = z₀ = 0, ∇f(0) = (−1, 0.5).
        let g = dv(&[-1.0, 0.5]);
        assert_eq!(first.pre_jump_x, dv(&[0.0, 0.0]));
        assert!((&first.x + &g).amax() < 1e-15);
        assert!((&first.z + &g * (t1 / 2.0)).amax() < 1e-15);
    }

    #[test]
    fn constant_objective_is_a_fixed_point() {
        let p = make_quadratic(vec![1.0], vec![2.0]).unwrap();
        let s = ParamSchedule::strongly_convex(1.0, 1.0).unwrap();
        let opts = RunOptions::new(10.0, dv(&[2.0])).with_checkpoints(vec![1.0, 5.0, 10.0]).with_events();
        let trace = run_continuized(&p, &NoiseModel::None, &s, &EventClock::default(), &opts, 1).unwrap();
        assert!(trace.samples.iter().all(|s| s.values.iter().all(|v| *v == 0.0)));
        assert_eq!(trace.checkpoints().count(), 3);
        assert_eq!(trace.terminal_state.t, 10.0);
    }

    #[test]
    fn snapshots_match_recursion() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        for s in [ParamSchedule::convex(1.0).unwrap(), ParamSchedule::strongly_convex(1.0, 0.01).unwrap()] {
            let opts = RunOptions::new(30.0, DVector::zeros(3)).with_snapshots();
            let trace = run_continuized(&p, &NoiseModel::None, &s, &EventClock::default(), &opts, 11).unwrap();
            let times: Vec<f64> = trace.snapshots.iter().map(|s| s.t).collect();
            let rec = three_sequence(&p, &s, &DVector::zeros(3), &DVector::zeros(3), &times).unwrap();
            for (a, b) in trace.snapshots.iter().zip(&rec) {
                assert_eq!(a.k, b.k);
                assert!((&a.x - &b.x).amax() <= 1e-12);
                assert!((&a.z - &b.z).amax() <= 1e-12);
                assert!((&a.pre_jump_x - &b.pre_jump_x).amax() <= 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let s = ParamSchedule::strongly_convex(1.0, 0.01).unwrap();
        let opts = RunOptions::new(20.0, DVector::zeros(3)).with_checkpoints(vec![1.0, 2.0, 20.0]);
        let noise = NoiseModel::Additive { sigma2: 0.1 };
        let a = run_continuized(&p, &noise, &s, &EventClock::default(), &opts, 5).unwrap();
        let b = run_continuized(&p, &noise, &s, &EventClock::default(), &opts, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_does_not_move_event_times() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let s = ParamSchedule::strongly_convex(1.0, 0.01).unwrap();
        let opts = RunOptions::new(20.0, DVector::zeros(3)).with_snapshots();
        let quiet = run_continuized(&p, &NoiseModel::None, &s, &EventClock::default(), &opts, 5).unwrap();
        let noisy =
            run_continuized(&p, &NoiseModel::Additive { sigma2: 1.0 }, &s, &EventClock::default(), &opts, 5).unwrap();
        let times = |t: &Trace| t.snapshots.iter().map(|s| s.t).collect::<Vec<_>>();
        assert_eq!(times(&quiet), times(&noisy));
    }

    #[test]
    fn coordinate_schedule_rejects_noise() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let s = ParamSchedule::for_problem(ScheduleKind::Coordinate, &p).unwrap();
        let opts = RunOptions::new(5.0, DVector::zeros(3));
        let noise = NoiseModel::Additive { sigma2: 1.0 };
        assert!(run_continuized(&p, &noise, &s, &EventClock::default(), &opts, 0).is_err());
        assert!(run_continuized(&p, &NoiseModel::None, &s, &EventClock::default(), &opts, 0).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let s = ParamSchedule::convex(1.0).unwrap();
        let c = EventClock::default();
        let none = NoiseModel::None;
        assert!(run_continuized(&p, &none, &s, &c, &RunOptions::new(0.0, DVector::zeros(3)), 0).is_err());
        assert!(run_continuized(&p, &none, &s, &c, &RunOptions::new(1.0, DVector::zeros(2)), 0).is_err());
        let unordered = RunOptions::new(1.0, DVector::zeros(3)).with_checkpoints(vec![0.5, 0.5]);
        assert!(run_continuized(&p, &none, &s, &c, &unordered, 0).is_err());
    }
}
