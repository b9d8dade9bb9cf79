//! Asynchronous accelerated decentralized optimization: continuized
//! accelerated coordinate descent on the dual of
//! `min Σ_v f_v(x_v)` subject to consensus, one coordinate per edge.
//!
//! Node `v` keeps `y_v` and `z_v`, its rows of `Aλ^{(y)}` and `Aλ^{(z)}`
//! where `A` is the weighted incidence operator with `AAᵀ = 𝓛`. Its primal
//! estimate is `∇f_v^*(z_v)`.

use nalgebra::{DMatrix, DVector};

use crate::continuized::{CoupledState, EventClock};
use crate::error::{Error, Result};
use crate::events::{EventSource, PoissonMarks};
use crate::graphs::{Graph, SpectralCache};
use crate::rng::{stream, CLOCK_STREAM};
use crate::trace::{Sample, Snapshot, Trace};

pub const METRICS: [&str; 1] = ["dist"];

/// `f_v(x) = (μ_v/2)‖x − c_v‖²`.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalFunction {
    Quadratic { curvature: f64, center: DVector<f64> },
}

impl LocalFunction {
    pub fn quadratic(curvature: f64, center: DVector<f64>) -> Result<Self> {
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::InvalidProblem(format!("local curvature must be positive, got {curvature}")));
        }
        Ok(LocalFunction::Quadratic { curvature, center })
    }

    pub fn dimension(&self) -> usize {
        match self {
            LocalFunction::Quadratic { center, .. } => center.len(),
        }
    }

    pub fn curvature(&self) -> f64 {
        match self {
            LocalFunction::Quadratic { curvature, .. } => *curvature,
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            LocalFunction::Quadratic { curvature, center } => (x - center) * *curvature,
        }
    }

    /// `∇f_v^*(y) = c_v + y/μ_v`.
    pub fn conjugate_grad(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            LocalFunction::Quadratic { curvature, center } => center + y / *curvature,
        }
    }
}

/// Free-function form of [`LocalFunction::conjugate_grad`].
pub fn conjugate_grad(fv: &LocalFunction, y: &DVector<f64>) -> DVector<f64> {
    fv.conjugate_grad(y)
}

/// `R_e = (A†A)_ee = P_e · R_eff(e)`, in edge order.
pub fn incidence_r(graph: &Graph, cache: &SpectralCache) -> Vec<f64> {
    graph.probs().iter().zip(&cache.r_eff).map(|(p, r)| p * r).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualParams {
    /// Directional smoothness bound of the dual along edge coordinates.
    pub l_dual: f64,
    pub theta_prime: f64,
    /// Mixing rate `η = η'`.
    pub eta: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    /// `R_e` per edge.
    pub r: Vec<f64>,
    /// Smoothness of the dual along edge `e` is `edge_smoothness · P_e / μ`.
    pub edge_smoothness: f64,
}

impl DualParams {
    /// Parameters for `μ`-strongly convex, `L`-smooth local functions, with
    /// dual directional smoothness `M_ee = edge_smoothness · P_e / μ`:
    ///
    /// `L_dual = max_e M_ee R_e / P_e²`, `θ' = √(μ_gossip / (edge_smoothness · max_e R_e/P_e))`,
    /// `η = θ'/√κ` with `κ = L/μ`, `γ = 1/L_dual`, `γ' = √(L / (μ_gossip L_dual))`.
    pub fn with_edge_smoothness(
        graph: &Graph,
        cache: &SpectralCache,
        mu: f64,
        l: f64,
        edge_smoothness: f64,
    ) -> Result<Self> {
        if !(mu > 0.0 && l >= mu && l.is_finite()) {
            return Err(Error::InvalidProblem(format!("need 0 < mu <= L, got mu = {mu}, L = {l}")));
        }
        let r = incidence_r(graph, cache);
        let max_ratio = r.iter().zip(graph.probs()).map(|(r, p)| r / p).fold(0.0, f64::max);
        let l_dual = edge_smoothness * max_ratio / mu;
        let theta_prime = (cache.mu_gossip / (edge_smoothness * max_ratio)).sqrt();
        let kappa = l / mu;
        let params = DualParams {
            l_dual,
            theta_prime,
            eta: theta_prime / kappa.sqrt(),
            gamma: 1.0 / l_dual,
            gamma_prime: (l / (cache.mu_gossip * l_dual)).sqrt(),
            r,
            edge_smoothness,
        };
        for (e, (&re, &p)) in params.r.iter().zip(graph.probs()).enumerate() {
            let m_ee = edge_smoothness * p / mu;
            if params.l_dual < m_ee * re / (p * p) * (1.0 - 1e-12) {
                return Err(Error::InvalidProblem(format!("L_dual below the smoothness bound on edge {e}")));
            }
        }
        Ok(params)
    }

    /// The exact directional smoothness `M_ee = ‖A e_e‖²/μ = 2P_e/μ`.
    pub fn new(graph: &Graph, cache: &SpectralCache, mu: f64, l: f64) -> Result<Self> {
        Self::with_edge_smoothness(graph, cache, mu, l, 2.0)
    }
}

/// Rows are nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub last_t: Vec<f64>,
    pub t: f64,
    pub event_count: u64,
}

impl DualState {
    /// `λ^{(y)} = λ^{(z)} = 0`.
    pub fn zeros(nodes: usize, dim: usize) -> Self {
        DualState {
            y: DMatrix::zeros(nodes, dim),
            z: DMatrix::zeros(nodes, dim),
            last_t: vec![0.0; nodes],
            t: 0.0,
            event_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.y.nrows()
    }

    pub fn mix_node(&mut self, v: usize, to_t: f64, eta: f64) -> Result<()> {
        let from = self.last_t[v];
        if !(to_t >= from) {
            return Err(Error::InvalidInterval { from, to: to_t });
        }
        if to_t > from {
            let decay = (-2.0 * eta * (to_t - from)).exp();
            for j in 0..self.y.ncols() {
                let (y, z) = (self.y[(v, j)], self.z[(v, j)]);
                let m = 0.5 * (y + z);
                let half = 0.5 * (y - z) * decay;
                self.y[(v, j)] = m + half;
                self.z[(v, j)] = m - half;
            }
        }
        self.last_t[v] = to_t;
        Ok(())
    }

    pub fn synced(&self, t: f64, eta: f64) -> Result<Self> {
        let mut out = self.clone();
        for v in 0..out.node_count() {
            out.mix_node(v, t, eta)?;
        }
        out.t = out.t.max(t);
        Ok(out)
    }
}

/// Activation of edge `{v, w}` at `t_event`: both endpoints are mixed to
/// `t_event`, then with `g = P_e(∇f_v^*(y_v) − ∇f_w^*(y_w))`
/// `y_v −= γ R_e/P_e² g`, `z_v −= γ'/P_e g` and the opposite on `w`.
pub fn dual_update(
    state: &mut DualState,
    graph: &Graph,
    edge: (usize, usize),
    params: &DualParams,
    fv: &LocalFunction,
    fw: &LocalFunction,
    t_event: f64,
) -> Result<()> {
    let (v, w) = edge;
    let e = graph.edge_index(v, w)?;
    let p = graph.probs()[e];
    state.mix_node(v, t_event, params.eta)?;
    state.mix_node(w, t_event, params.eta)?;
    let yv = state.y.row(v).transpose();
    let yw = state.y.row(w).transpose();
    let g = (fv.conjugate_grad(&yv) - fw.conjugate_grad(&yw)) * p;
    let y_step = params.gamma * params.r[e] / (p * p);
    let z_step = params.gamma_prime / p;
    for j in 0..g.len() {
        state.y[(v, j)] -= y_step * g[j];
        state.y[(w, j)] += y_step * g[j];
        state.z[(v, j)] -= z_step * g[j];
        state.z[(w, j)] += z_step * g[j];
    }
    state.t = state.t.max(t_event);
    state.event_count += 1;
    Ok(())
}

/// `x_v = ∇f_v^*(z_v)`, one row per node.
pub fn primal_recover(state: &DualState, fs: &[LocalFunction]) -> DMatrix<f64> {
    primal_of(&state.z, fs)
}

fn primal_of(m: &DMatrix<f64>, fs: &[LocalFunction]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (v, f) in fs.iter().enumerate() {
        out.set_row(v, &f.conjugate_grad(&m.row(v).transpose()).transpose());
    }
    out
}

/// Minimizer of `Σ_v f_v`: `(Σ μ_v)⁻¹ Σ μ_v c_v`.
pub fn x_star(fs: &[LocalFunction]) -> DVector<f64> {
    let dim = fs.first().map_or(0, |f| f.dimension());
    let mut num = DVector::zeros(dim);
    let mut den = 0.0;
    for f in fs {
        let LocalFunction::Quadratic { curvature, center } = f;
        num += center * *curvature;
        den += curvature;
    }
    num / den
}

/// `Σ_v ½‖∇f_v^*(z_v) − x_*‖²`.
pub fn distance_to_optimum(state: &DualState, fs: &[LocalFunction], xs: &DVector<f64>) -> f64 {
    let x = primal_recover(state, fs);
    (0..x.nrows()).map(|v| 0.5 * (x.row(v).transpose() - xs).norm_squared()).sum()
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecentralizedOptions {
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    /// Synchronized primal iterates `∇f^*(y)` and `∇f^*(z)` around every jump.
    pub record_snapshots: bool,
}

impl DecentralizedOptions {
    pub fn new(horizon: f64, checkpoints: Vec<f64>) -> Self {
        DecentralizedOptions { horizon, checkpoints, record_snapshots: false }
    }
}

pub fn run_decentralized_events<S: EventSource>(
    graph: &Graph,
    fs: &[LocalFunction],
    params: &DualParams,
    opts: &DecentralizedOptions,
    events: &mut S,
) -> Result<Trace> {
    if fs.len() != graph.node_count() {
        return Err(Error::DimensionMismatch { expected: graph.node_count(), got: fs.len() });
    }
    let dim = fs[0].dimension();
    if let Some(f) = fs.iter().find(|f| f.dimension() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: f.dimension() });
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidInterval { from: 0.0, to: opts.horizon });
    }
    if let Some(w) = opts.checkpoints.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInterval { from: w[0], to: w[1] });
    }
    let xs = x_star(fs);
    let eta = params.eta;
    let mut state = DualState::zeros(graph.node_count(), dim);
    let coupled = |s: &DualState| CoupledState {
        x: flatten(&primal_of(&s.y, fs)),
        z: flatten(&primal_of(&s.z, fs)),
        t: s.t,
        event_count: s.event_count,
    };
    let mut trace = Trace::new(&METRICS, coupled(&state));
    let mut pending = opts.checkpoints.iter().copied().filter(|t| *t >= 0.0 && *t <= opts.horizon).peekable();
    let sample = |s: &DualState, t: f64| -> Result<Sample> {
        let synced = s.synced(t, eta)?;
        Ok(Sample {
            t,
            k: s.event_count,
            values: vec![distance_to_optimum(&synced, fs, &xs)],
            checkpoint: true,
            event: false,
        })
    };
    loop {
        let next = events.next_event();
        let t_next = next.map_or(f64::INFINITY, |e| e.t);
        while let Some(&tc) = pending.peek() {
            if tc >= t_next {
                break;
            }
            trace.push(sample(&state, tc)?);
            pending.next();
        }
        let Some(event) = next.filter(|e| e.t <= opts.horizon) else {
            break;
        };
        let (v, w) = *graph
            .edges()
            .get(event.mark)
            .ok_or_else(|| Error::InvalidGraph(format!("event mark {} is not an edge", event.mark)))?;
        let pre = opts.record_snapshots.then(|| state.synced(event.t, eta)).transpose()?;
        dual_update(&mut state, graph, (v, w), params, &fs[v], &fs[w], event.t)?;
        state.t = event.t;
        if let Some(pre) = pre {
            let post = coupled(&state.synced(event.t, eta)?);
            trace.snapshots.push(Snapshot {
                t: event.t,
                k: state.event_count,
                pre_jump_x: flatten(&primal_of(&pre.y, fs)),
                x: post.x,
                z: post.z,
            });
        }
        if pending.peek() == Some(&event.t) {
            pending.next();
            trace.push(sample(&state, event.t)?);
        }
    }
    let terminal = state.synced(opts.horizon, eta)?;
    trace.terminal_state = CoupledState { t: opts.horizon, ..coupled(&terminal) };
    Ok(trace)
}

/// [`run_decentralized_events`] on a Poisson stream from stream 0 of `seed`.
pub fn run_decentralized(
    graph: &Graph,
    fs: &[LocalFunction],
    params: &DualParams,
    opts: &DecentralizedOptions,
    seed: u64,
) -> Result<Trace> {
    let mut events = PoissonMarks::new(EventClock::default(), graph.sampler(), stream(seed, CLOCK_STREAM));
    run_decentralized_events(graph, fs, params, opts, &mut events)
}

/// Quadratics with curvatures uniform in `[mu, l]` and centers with
/// standard normal entries, drawn from stream 1 of `seed`.
pub fn random_quadratics(nodes: usize, dim: usize, mu: f64, l: f64, seed: u64) -> Result<Vec<LocalFunction>> {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = stream(seed, crate::rng::NOISE_STREAM);
    (0..nodes)
        .map(|_| {
            let curvature = if l > mu { rng.random_range(mu..=l) } else { mu };
            let center = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            LocalFunction::quadratic(curvature, center)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_graph, spectral, Topology, Weights};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn setup(t: Topology) -> (Graph, SpectralCache) {
        let g = build_graph(&t, Weights::Uniform).unwrap();
        let c = spectral(&g).unwrap();
        (g, c)
    }

    #[test]
    fn conjugate_gradient_values() {
        let f = LocalFunction::quadratic(1.0, dv(&[1.0, -2.0])).unwrap();
        assert_eq!(f.conjugate_grad(&DVector::zeros(2)), dv(&[1.0, -2.0]));
        assert_eq!(f.conjugate_grad(&dv(&[0.5, 0.5])), dv(&[1.5, -1.5]));
        let f = LocalFunction::quadratic(0.3, dv(&[0.2])).unwrap();
        for x in [-3.0, 0.0, 1.7] {
            assert!((f.conjugate_grad(&f.gradient(&dv(&[x])))[0] - x).abs() < 1e-12);
        }
        assert!(LocalFunction::quadratic(0.0, dv(&[0.0])).is_err());
    }

    #[test]
    fn incidence_values() {
        let (g, c) = setup(Topology::Line(2));
        // P = 1 and R_eff = 1: A†A is the identity on the single edge.
        assert!((incidence_r(&g, &c)[0] - 1.0).abs() < 1e-14);
        let (g, c) = setup(Topology::Complete(10));
        assert!(incidence_r(&g, &c).iter().all(|r| (r - 0.2).abs() < 1e-12));
        for t in [Topology::Line(7), Topology::Grid { rows: 3, cols: 4 }, Topology::Cycle(5)] {
            let (g, c) = setup(t);
            let total: f64 = incidence_r(&g, &c).iter().sum();
            assert!((total - (g.node_count() - 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn consensus_edge_is_a_no_op() {
        let (g, c) = setup(Topology::Line(2));
        let p = DualParams::new(&g, &c, 1.0, 1.0).unwrap();
        let f = LocalFunction::quadratic(1.0, dv(&[0.0])).unwrap();
        let mut s = DualState::zeros(2, 1);
        dual_update(&mut s, &g, (0, 1), &p, &f, &f, 1.0).unwrap();
        assert_eq!(s.y, DMatrix::zeros(2, 1));
        assert_eq!(s.z, DMatrix::zeros(2, 1));
        assert_eq!(s.event_count, 1);
    }

    #[test]
    fn two_nodes_converge_to_the_average() {
        let (g, c) = setup(Topology::Line(2));
        let fs = vec![
            LocalFunction::quadratic(1.0, dv(&[1.0])).unwrap(),
            LocalFunction::quadratic(1.0, dv(&[-1.0])).unwrap(),
        ];
        let p = DualParams::new(&g, &c, 1.0, 1.0).unwrap();
        let trace = run_decentralized(&g, &fs, &p, &DecentralizedOptions::new(60.0, vec![0.0, 60.0]), 2).unwrap();
        let d = trace.checkpoint_series("dist");
        assert_eq!(d[0].1, 1.0);
        assert!(d[1].1 < 1e-8, "D = {}", d[1].1);
        assert!(trace.terminal_state.z.amax() < 1e-4);
    }

    #[test]
    fn identical_functions_stay_optimal() {
        let (g, c) = setup(Topology::Cycle(5));
        let f = LocalFunction::quadratic(0.5, dv(&[1.0, 2.0])).unwrap();
        let fs = vec![f; 5];
        assert_eq!(x_star(&fs), dv(&[1.0, 2.0]));
        let p = DualParams::new(&g, &c, 0.5, 0.5).unwrap();
        let trace = run_decentralized(&g, &fs, &p, &DecentralizedOptions::new(30.0, vec![0.0, 10.0, 30.0]), 1).unwrap();
        assert!(trace.checkpoint_series("dist").iter().all(|(_, d)| *d == 0.0));
    }

    #[test]
    fn params_are_finite_and_feasible() {
        let (g, c) = setup(Topology::Grid { rows: 3, cols: 3 });
        for factor in [1.0, 2.0] {
            let p = DualParams::with_edge_smoothness(&g, &c, 0.1, 1.0, factor).unwrap();
            for v in [p.l_dual, p.theta_prime, p.eta, p.gamma, p.gamma_prime] {
                assert!(v > 0.0 && v.is_finite());
            }
        }
        assert!(DualParams::new(&g, &c, 2.0, 1.0).is_err());
    }

    #[test]
    fn primal_recovery_at_zero_is_the_centers() {
        let fs = vec![
            LocalFunction::quadratic(1.0, dv(&[3.0])).unwrap(),
            LocalFunction::quadratic(2.0, dv(&[-1.0])).unwrap(),
        ];
        let x = primal_recover(&DualState::zeros(2, 1), &fs);
        assert_eq!(x.as_slice(), &[3.0, -1.0]);
        assert!((x_star(&fs)[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(30))]

        #[test]
        fn dual_iterates_stay_mean_zero(seed in proptest::prelude::any::<u64>(), n in 3usize..9) {
            use rand::Rng;
            let (g, c) = setup(Topology::Cycle(n));
            let fs = random_quadratics(n, 2, 0.1, 1.0, seed).unwrap();
            let p = DualParams::new(&g, &c, 0.1, 1.0).unwrap();
            let mut rng = stream(seed, 0);
            let mut state = DualState::zeros(n, 2);
            let mut t = 0.0;
            for _ in 0..200 {
                t += rng.random_range(0.0..0.2);
                let (v, w) = g.edges()[rng.random_range(0..g.edge_count())];
                dual_update(&mut state, &g, (v, w), &p, &fs[v], &fs[w], t).unwrap();
                let synced = state.synced(t + 0.5, p.eta).unwrap();
                for m in [&synced.y, &synced.z] {
                    for col in m.column_iter() {
                        proptest::prop_assert!(col.sum().abs() <= 1e-9, "drift {}", col.sum());
                    }
                }
            }
        }
    }
}
