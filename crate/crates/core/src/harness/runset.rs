//! Seeded ensembles and their per-checkpoint aggregates.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{ExperimentKind, ExperimentSpec, FunctionsSpec, GossipChoice, GossipInit, ProblemFamily, Start};
use crate::continuized::{
    lyapunov_value, run_continuized, CoupledState, EventClock, LyapunovNorm, ParamSchedule, RunOptions, ScheduleKind,
};
use crate::dual::{random_quadratics, run_decentralized, DecentralizedOptions, DualParams, LocalFunction};
use crate::error::{Error, Result};
use crate::gossip::{run_gossip, spike, GossipAlgo, GossipOptions, GossipParams};
use crate::graphs::{build_graph, gossip_rates, spectral, Graph, SpectralCache};
use crate::problems::{
    ill_conditioned_convex, make_quadratic, three_scale_quadratic, ConvexProblem, LeastSquaresProblem, LsSample,
    NoiseModel,
};
use crate::rng::derive_seed;
use crate::trace::{Sample, Trace};

/// Summary of one metric at one checkpoint across the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation over `√n`; zero for a single run.
    pub std_err: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
}

/// Quantile of sorted data by linear interpolation between order
/// statistics at position `q·(n − 1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Aggregates values listed in run order. The reduction order is fixed, so
/// the result does not depend on how the runs were scheduled.
pub fn summarize(values: &[f64]) -> Stats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_err = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Stats { mean, std_err, q05: quantile(&sorted, 0.05), median: quantile(&sorted, 0.5), q95: quantile(&sorted, 0.95) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub name: String,
    /// One entry per checkpoint.
    pub stats: Vec<Stats>,
    /// Theoretical reference curve on the checkpoint grid, when requested.
    pub bound: Option<Vec<f64>>,
}

impl MetricSummary {
    pub fn means(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.mean).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSet {
    pub times: Vec<f64>,
    /// In run-index order.
    pub traces: Vec<Trace>,
    pub summaries: Vec<MetricSummary>,
}

impl RunSet {
    /// Aggregates traces that all carry the checkpoint grid `times`.
    /// `bounds[m]` is the optional reference curve of metric `m`.
    pub fn from_traces(times: Vec<f64>, traces: Vec<Trace>, bounds: Vec<Option<Vec<f64>>>) -> Result<Self> {
        let Some(first) = traces.first() else {
            return Err(Error::Config(vec!["runs: must be >= 1".into()]));
        };
        let metrics = first.metrics.clone();
        let mut columns: Vec<Vec<Vec<f64>>> = vec![vec![Vec::with_capacity(traces.len()); times.len()]; metrics.len()];
        for (run, trace) in traces.iter().enumerate() {
            let grid: Vec<&Sample> = trace.checkpoints().collect();
            if trace.metrics != metrics || grid.len() != times.len() || grid.iter().zip(&times).any(|(s, t)| s.t != *t) {
                return Err(Error::Run {
                    run,
                    source: Box::new(Error::InvalidSchedule("trace does not match the checkpoint grid".into())),
                });
            }
            for (j, s) in grid.iter().enumerate() {
                for (m, v) in s.values.iter().enumerate() {
                    columns[m][j].push(*v);
                }
            }
        }
        let summaries = metrics
            .into_iter()
            .zip(columns)
            .enumerate()
            .map(|(m, (name, cols))| MetricSummary {
                name,
                stats: cols.iter().map(|c| summarize(c)).collect(),
                bound: bounds.get(m).cloned().flatten(),
            })
            .collect();
        Ok(RunSet { times, traces, summaries })
    }

    pub fn summary(&self, metric: &str) -> Option<&MetricSummary> {
        self.summaries.iter().find(|s| s.name == metric)
    }

    pub fn metrics(&self) -> Vec<&str> {
        self.summaries.iter().map(|s| s.name.as_str()).collect()
    }
}

/// Everything a single run needs, built once and shared by all runs.
enum Plan {
    Optimize {
        problem: ConvexProblem,
        noise: NoiseModel,
        schedule: ParamSchedule,
        clock: EventClock,
        opts: RunOptions,
    },
    Gossip {
        graph: Graph,
        algos: Vec<GossipParams>,
        x0: DMatrix<f64>,
        opts: GossipOptions,
    },
    Decentralized {
        graph: Graph,
        fs: Vec<LocalFunction>,
        params: DualParams,
        opts: DecentralizedOptions,
    },
}

impl Plan {
    fn run(&self, seed: u64) -> Result<Trace> {
        match self {
            Plan::Optimize { problem, noise, schedule, clock, opts } => {
                run_continuized(problem, noise, schedule, clock, opts, seed)
            }
            Plan::Gossip { graph, algos, x0, opts } => {
                let mut traces = algos
                    .iter()
                    .map(|p| run_gossip(graph, p, x0.clone(), opts, seed))
                    .collect::<Result<Vec<_>>>()?;
                if traces.len() == 1 {
                    return Ok(traces.pop().expect("one trace"));
                }
                Ok(merge_gossip(traces))
            }
            Plan::Decentralized { graph, fs, params, opts } => run_decentralized(graph, fs, params, opts, seed),
        }
    }
}

/// Side-by-side accelerated and naive energies on the checkpoint grid.
fn merge_gossip(traces: Vec<Trace>) -> Trace {
    let mut it = traces.into_iter();
    let acc = it.next().expect("accelerated trace");
    let naive = it.next().expect("naive trace");
    let mut merged = Trace::new(&["energy_accelerated", "energy_naive"], acc.terminal_state.clone());
    for (a, n) in acc.checkpoints().zip(naive.checkpoints()) {
        merged.push(Sample { values: vec![a.values[0], n.values[0]], ..a.clone() });
    }
    merged
}

pub fn build_problem(family: &ProblemFamily) -> Result<ConvexProblem> {
    match family {
        ProblemFamily::Quadratic { diag, center } => make_quadratic(diag.clone(), center.clone()),
        ProblemFamily::IllConditioned { dimension } => Ok(ill_conditioned_convex(*dimension)),
        ProblemFamily::ThreeScale { mu, l } => three_scale_quadratic(*mu, *l),
        ProblemFamily::LeastSquares { samples } => {
            let samples = samples
                .iter()
                .map(|(a, b, w)| LsSample { a: DVector::from_column_slice(a), b: *b, weight: *w })
                .collect();
            Ok(ConvexProblem::LeastSquares(LeastSquaresProblem::new(samples)?))
        }
    }
}

fn start_point(start: &Start, problem: &ConvexProblem) -> Result<DVector<f64>> {
    let d = problem.dimension();
    match start {
        Start::Origin => Ok(DVector::zeros(d)),
        Start::Optimum => Ok(problem.optimum().clone()),
        Start::Point(v) if v.len() == d => Ok(DVector::from_column_slice(v)),
        Start::Point(v) => Err(Error::DimensionMismatch { expected: d, got: v.len() }),
    }
}

fn gossip_start(init: &GossipInit, n: usize) -> Result<DMatrix<f64>> {
    match init {
        GossipInit::Spike(v) if *v < n => Ok(spike(n, *v)),
        GossipInit::Spike(v) => Err(Error::InvalidGraph(format!("spike node {v} is outside 0..{n}"))),
        GossipInit::Values(vals) if vals.len() == n => Ok(DMatrix::from_column_slice(n, 1, vals)),
        GossipInit::Values(vals) => Err(Error::DimensionMismatch { expected: n, got: vals.len() }),
    }
}

fn local_functions(spec: &ExperimentSpec, n: usize) -> Result<Vec<LocalFunction>> {
    let d = spec.decentralized.as_ref().expect("validated");
    let fs = match &d.functions {
        FunctionsSpec::Random { seed } => random_quadratics(n, d.dimension, d.mu, d.l, *seed)?,
        FunctionsSpec::Explicit(list) => {
            if list.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: list.len() });
            }
            list.iter()
                .map(|(c, center)| LocalFunction::quadratic(*c, DVector::from_column_slice(center)))
                .collect::<Result<_>>()?
        }
    };
    if let Some(f) = fs.iter().find(|f| f.curvature() < d.mu || f.curvature() > d.l) {
        return Err(Error::InvalidProblem(format!(
            "local curvature {} lies outside [{}, {}]",
            f.curvature(),
            d.mu,
            d.l
        )));
    }
    Ok(fs)
}

pub fn graph_of(spec: &ExperimentSpec) -> Result<(Graph, SpectralCache)> {
    let g = spec.graph.as_ref().ok_or_else(|| Error::Config(vec!["graph: section required".into()]))?;
    let graph = build_graph(&g.topology, g.weights.clone())?;
    let cache = spectral(&graph)?;
    Ok((graph, cache))
}

/// Reference curves, one per trace metric.
fn optimize_bounds(
    problem: &ConvexProblem,
    noise: &NoiseModel,
    schedule: &ParamSchedule,
    x0: &DVector<f64>,
    times: &[f64],
) -> Result<Vec<Option<Vec<f64>>>> {
    let xs = problem.optimum();
    let l = problem.smoothness();
    let mu = problem.strong_convexity();
    let r0 = (x0 - xs).norm_squared();
    let sigma2 = match noise {
        NoiseModel::Additive { sigma2 } => *sigma2,
        _ => 0.0,
    };
    let curve = |f: &dyn Fn(f64) -> f64| Some(times.iter().map(|&t| f(t)).collect::<Vec<f64>>());
    let none = || vec![None, None, None];
    match schedule.kind() {
        ScheduleKind::Convex => {
            Ok(vec![curve(&|t| 2.0 * l * r0 / (t * t) + sigma2 * t / (3.0 * l)), None, None])
        }
        ScheduleKind::StronglyConvex => {
            let e0 = problem.gap(x0) + 0.5 * mu * r0;
            let rate = (mu / l).sqrt();
            Ok(vec![curve(&|t| e0 * (-rate * t).exp() + sigma2 / (mu * l).sqrt()), None, None])
        }
        // The potential never increases in expectation and dominates A_t
        // times the tracked error, so φ_0 / A_t bounds the mean error.
        _ if sigma2 == 0.0 => {
            let phi0 = lyapunov_value(&CoupledState::new(x0.clone(), x0.clone()), &schedule.lyapunov_coeffs(0.0), problem)?;
            let over_a = |t: f64| phi0 / schedule.lyapunov_coeffs(t).a;
            Ok(match schedule.norm() {
                LyapunovNorm::Objective => vec![curve(&over_a), None, None],
                LyapunovNorm::Multiplicative => vec![None, curve(&|t| 2.0 * over_a(t)), None],
            })
        }
        _ => Ok(none()),
    }
}

fn gossip_bound(algo: GossipAlgo, cache: &SpectralCache, e0: f64, times: &[f64]) -> Vec<f64> {
    let (_, theta_arg) = gossip_rates(cache);
    times
        .iter()
        .map(|&t| match algo {
            GossipAlgo::Accelerated => 2.0 * e0 * (-theta_arg * t).exp(),
            // Each event removes (x_v − x_w)²/2 of energy, whose mean over
            // edges is at least μ_gossip/2 times the energy.
            GossipAlgo::Naive => e0 * (-0.5 * cache.mu_gossip * t).exp(),
        })
        .collect()
}

/// Runs the ensemble described by `spec`. Run `i` uses the seed
/// `derive_seed(spec.seed, i)`; runs execute in parallel but the result is
/// assembled in run order, so it is identical for every thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSet> {
    spec.validate()?;
    let times = spec.checkpoint_times();
    let (plan, bounds) = match spec.kind {
        ExperimentKind::Optimize => {
            let ps = spec.problem.as_ref().expect("validated");
            let problem = build_problem(&ps.family)?;
            let schedule = ParamSchedule::for_problem(spec.schedule.kind, &problem)?;
            let x0 = start_point(&ps.start, &problem)?;
            let bounds = optimize_bounds(&problem, &spec.noise, &schedule, &x0, &times)?;
            let opts = RunOptions::new(spec.horizon, x0).with_checkpoints(times.clone());
            let plan = Plan::Optimize { problem, noise: spec.noise, schedule, clock: spec.schedule.clock, opts };
            (plan, bounds)
        }
        ExperimentKind::Gossip => {
            let (graph, cache) = graph_of(spec)?;
            let x0 = gossip_start(&spec.gossip.init, graph.node_count())?;
            let algos = match spec.gossip.algo {
                GossipChoice::One(a) => vec![a],
                GossipChoice::Both => vec![GossipAlgo::Accelerated, GossipAlgo::Naive],
            };
            let e0 = crate::gossip::GossipNetworkState::new(x0.clone()).energy();
            let bounds = algos.iter().map(|a| Some(gossip_bound(*a, &cache, e0, &times))).collect();
            let algos = algos
                .into_iter()
                .map(|a| match a {
                    GossipAlgo::Accelerated => GossipParams::accelerated(&cache),
                    GossipAlgo::Naive => GossipParams::naive(),
                })
                .collect();
            let opts = GossipOptions::new(spec.horizon, times.clone());
            (Plan::Gossip { graph, algos, x0, opts }, bounds)
        }
        ExperimentKind::Decentralized => {
            let (graph, cache) = graph_of(spec)?;
            let fs = local_functions(spec, graph.node_count())?;
            let d = spec.decentralized.as_ref().expect("validated");
            let params = DualParams::new(&graph, &cache, d.mu, d.l)?;
            let opts = DecentralizedOptions::new(spec.horizon, times.clone());
            (Plan::Decentralized { graph, fs, params, opts }, vec![None])
        }
        ExperimentKind::GraphInfo => {
            return Err(Error::Config(vec!["kind: graph-info does not run an ensemble".into()]));
        }
    };
    let bounds = if spec.bounds { bounds } else { Vec::new() };
    let results: Vec<Result<Trace>> =
        (0..spec.runs).into_par_iter().map(|i| plan.run(derive_seed(spec.seed, i as u64))).collect();
    let traces = results
        .into_iter()
        .enumerate()
        .map(|(run, r)| r.map_err(|e| Error::Run { run, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    RunSet::from_traces(times, traces, bounds)
}
