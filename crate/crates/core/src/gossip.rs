//! Asynchronous randomized gossip for the averaging problem, naive and
//! accelerated, simulated event by event with lazy per-node mixing.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::continuized::{CoupledState, EventClock};
use crate::error::{Error, Result};
use crate::events::{EventSource, PoissonMarks};
use crate::graphs::{edge_vector, gossip_rates, Graph, SpectralCache};
use crate::problems::{LeastSquaresProblem, LsSample};
use crate::rng::{stream, CLOCK_STREAM};
use crate::trace::{Sample, Snapshot, Trace};

pub const METRICS: [&str; 1] = ["energy"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GossipAlgo {
    Naive,
    Accelerated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GossipParams {
    /// Rate `c` of the node-local mixing ODE.
    pub mix_rate: f64,
    pub z_step: f64,
    pub algo: GossipAlgo,
}

impl GossipParams {
    /// `c = √(μ_gossip / (2 R_max))`, `z_step = 1/√(2 μ_gossip R_max)`.
    pub fn accelerated(cache: &SpectralCache) -> Self {
        let (_, theta) = gossip_rates(cache);
        GossipParams {
            mix_rate: theta,
            z_step: 1.0 / (2.0 * cache.mu_gossip * cache.r_max).sqrt(),
            algo: GossipAlgo::Accelerated,
        }
    }

    pub fn naive() -> Self {
        GossipParams { mix_rate: 0.0, z_step: 0.0, algo: GossipAlgo::Naive }
    }
}

/// Per-node `(x, z, last_t)`; row `v` of `x` and `z` holds node `v`'s values.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipNetworkState {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub last_t: Vec<f64>,
    pub t: f64,
    /// Mean of the initial values.
    pub target: DVector<f64>,
    pub event_count: u64,
}

impl GossipNetworkState {
    /// `x = z = x0`, clocks at 0. Rows are nodes.
    pub fn new(x0: DMatrix<f64>) -> Self {
        let n = x0.nrows();
        let target = x0.row_mean().transpose();
        GossipNetworkState { z: x0.clone(), x: x0, last_t: vec![0.0; n], t: 0.0, target, event_count: 0 }
    }

    pub fn scalar(x0: &[f64]) -> Self {
        Self::new(DMatrix::from_column_slice(x0.len(), 1, x0))
    }

    pub fn node_count(&self) -> usize {
        self.x.nrows()
    }

    /// `Σ_v ½‖x_v − x̄‖²`.
    pub fn energy(&self) -> f64 {
        (0..self.node_count())
            .map(|v| 0.5 * (self.x.row(v).transpose() - &self.target).norm_squared())
            .sum()
    }

    /// Copy with every node mixed to `t`.
    pub fn synced(&self, t: f64, mix_rate: f64) -> Result<Self> {
        let mut out = self.clone();
        for v in 0..out.node_count() {
            lazy_mix_node(&mut out, v, t, mix_rate)?;
        }
        out.t = out.t.max(t);
        Ok(out)
    }

    /// Node values flattened node-major, as a [`CoupledState`].
    pub fn coupled(&self) -> CoupledState {
        CoupledState {
            x: DVector::from_iterator(self.x.len(), self.x.transpose().iter().copied()),
            z: DVector::from_iterator(self.z.len(), self.z.transpose().iter().copied()),
            t: self.t,
            event_count: self.event_count,
        }
    }
}

/// Next activation after `t_now`: `Exp(1)` wait (`Σ P = 1`), edge drawn from `P`.
pub fn next_event<R: Rng + ?Sized>(graph: &Graph, rng: &mut R, t_now: f64) -> (f64, usize) {
    let wait: f64 = Exp1.sample(rng);
    (t_now + wait, graph.sampler().sample(rng))
}

/// Pairwise averaging of `x` on `{v, w}`.
pub fn naive_step(state: &mut GossipNetworkState, graph: &Graph, v: usize, w: usize) -> Result<()> {
    graph.edge_index(v, w)?;
    for j in 0..state.x.ncols() {
        let m = 0.5 * (state.x[(v, j)] + state.x[(w, j)]);
        state.x[(v, j)] = m;
        state.x[(w, j)] = m;
    }
    state.event_count += 1;
    Ok(())
}

/// Advances node `v`'s mixing ODE from `last_t(v)` to `to_t` in closed form.
pub fn lazy_mix_node(state: &mut GossipNetworkState, v: usize, to_t: f64, mix_rate: f64) -> Result<()> {
    let from = state.last_t[v];
    if !(to_t >= from) {
        return Err(Error::InvalidInterval { from, to: to_t });
    }
    if to_t > from && mix_rate > 0.0 {
        let decay = (-2.0 * mix_rate * (to_t - from)).exp();
        for j in 0..state.x.ncols() {
            let (x, z) = (state.x[(v, j)], state.z[(v, j)]);
            let m = 0.5 * (x + z);
            let half = 0.5 * (x - z) * decay;
            state.x[(v, j)] = m + half;
            state.z[(v, j)] = m - half;
        }
    }
    state.last_t[v] = to_t;
    Ok(())
}

/// Mixes both endpoints to `t_event`, then moves both `x` to their midpoint
/// and pushes `z` along the pre-jump difference.
pub fn accelerated_step(
    state: &mut GossipNetworkState,
    graph: &Graph,
    v: usize,
    w: usize,
    params: &GossipParams,
    t_event: f64,
) -> Result<()> {
    graph.edge_index(v, w)?;
    lazy_mix_node(state, v, t_event, params.mix_rate)?;
    lazy_mix_node(state, w, t_event, params.mix_rate)?;
    for j in 0..state.x.ncols() {
        let (xv, xw) = (state.x[(v, j)], state.x[(w, j)]);
        let m = 0.5 * (xv + xw);
        state.x[(v, j)] = m;
        state.x[(w, j)] = m;
        let push = params.z_step * (xw - xv);
        state.z[(v, j)] += push;
        state.z[(w, j)] -= push;
    }
    state.t = state.t.max(t_event);
    state.event_count += 1;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossipOptions {
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    /// Mix every node at every event instead of only the endpoints.
    pub eager: bool,
    /// Fully synchronized state before and after every jump.
    pub record_snapshots: bool,
}

impl GossipOptions {
    pub fn new(horizon: f64, checkpoints: Vec<f64>) -> Self {
        GossipOptions { horizon, checkpoints, eager: false, record_snapshots: false }
    }
}

/// Event loop over `events` (marks are edge indices). Records the energy at
/// the checkpoints, measured on a synchronized copy.
pub fn run_gossip_events<S: EventSource>(
    graph: &Graph,
    params: &GossipParams,
    x0: DMatrix<f64>,
    opts: &GossipOptions,
    events: &mut S,
) -> Result<Trace> {
    if x0.nrows() != graph.node_count() {
        return Err(Error::DimensionMismatch { expected: graph.node_count(), got: x0.nrows() });
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidInterval { from: 0.0, to: opts.horizon });
    }
    if let Some(w) = opts.checkpoints.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInterval { from: w[0], to: w[1] });
    }
    let rate = params.mix_rate;
    let mut state = GossipNetworkState::new(x0);
    let mut trace = Trace::new(&METRICS, state.coupled());
    let mut pending = opts.checkpoints.iter().copied().filter(|t| *t >= 0.0 && *t <= opts.horizon).peekable();
    loop {
        let next = events.next_event();
        let t_next = next.map_or(f64::INFINITY, |e| e.t);
        while let Some(&tc) = pending.peek() {
            if tc >= t_next {
                break;
            }
            let probe = state.synced(tc, rate)?;
            trace.push(Sample { t: tc, k: state.event_count, values: vec![probe.energy()], checkpoint: true, event: false });
            pending.next();
        }
        let Some(event) = next.filter(|e| e.t <= opts.horizon) else {
            break;
        };
        let (v, w) = *graph
            .edges()
            .get(event.mark)
            .ok_or_else(|| Error::InvalidGraph(format!("event mark {} is not an edge", event.mark)))?;
        if opts.eager {
            state = state.synced(event.t, rate)?;
        }
        let pre = opts.record_snapshots.then(|| state.synced(event.t, rate)).transpose()?;
        match params.algo {
            GossipAlgo::Naive => naive_step(&mut state, graph, v, w)?,
            GossipAlgo::Accelerated => accelerated_step(&mut state, graph, v, w, params, event.t)?,
        }
        state.t = event.t;
        if let Some(pre) = pre {
            let post = state.synced(event.t, rate)?.coupled();
            trace.snapshots.push(Snapshot {
                t: event.t,
                k: state.event_count,
                pre_jump_x: pre.coupled().x,
                x: post.x,
                z: post.z,
            });
        }
        if pending.peek() == Some(&event.t) {
            pending.next();
            let probe = state.synced(event.t, rate)?;
            trace.push(Sample { t: event.t, k: state.event_count, values: vec![probe.energy()], checkpoint: true, event: false });
        }
    }
    let terminal = state.synced(opts.horizon, rate)?;
    trace.terminal_state = CoupledState { t: opts.horizon, ..terminal.coupled() };
    Ok(trace)
}

/// [`run_gossip_events`] on a Poisson stream drawn from stream 0 of `seed`.
pub fn run_gossip(
    graph: &Graph,
    params: &GossipParams,
    x0: DMatrix<f64>,
    opts: &GossipOptions,
    seed: u64,
) -> Result<Trace> {
    let mut events = PoissonMarks::new(EventClock::default(), graph.sampler(), stream(seed, CLOCK_STREAM));
    run_gossip_events(graph, params, x0, opts, &mut events)
}

/// `x₀(v) = 0` everywhere except `x₀(spike) = 1`.
pub fn spike(node_count: usize, spike: usize) -> DMatrix<f64> {
    let mut x0 = DMatrix::zeros(node_count, 1);
    x0[(spike, 0)] = 1.0;
    x0
}

/// The averaging problem as least squares: atoms `a = e_v − e_w`, `b = 0`,
/// weights `P`, in edge order. Its Hessian is the Laplacian.
pub fn averaging_problem(graph: &Graph) -> Result<LeastSquaresProblem> {
    let n = graph.node_count();
    let samples = graph
        .edges()
        .iter()
        .zip(graph.probs())
        .map(|(&(v, w), &p)| LsSample { a: edge_vector(n, v, w), b: 0.0, weight: p })
        .collect();
    LeastSquaresProblem::new(samples)
}
