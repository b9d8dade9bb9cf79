//! Experiment configuration: a strict TOML grammar.
//!
//! ```toml
//! kind = "optimize"           # optimize | gossip | decentralized | graph-info
//! horizon = 100.0
//! runs = 1000                 # default 1000
//! seed = 0                    # default 0
//! checkpoints = 50            # a count, or an explicit list of times
//! spacing = "log"             # log | linear, for a checkpoint count
//! bounds = true               # append the theoretical reference column
//! output = "out.csv"
//!
//! [problem]                   # optimize
//! family = "ill-conditioned"  # quadratic | ill-conditioned | three-scale | least-squares
//! dimension = 100             # ill-conditioned
//! # diag = [..], center = [..]            quadratic
//! # mu = 0.01, l = 1.0                    three-scale
//! # samples = [{ a = [..], b = 0.0, weight = 0.5 }, ..]   least-squares
//! start = "origin"            # origin | optimum, or x0 = [..]
//!
//! [noise]
//! kind = "none"               # none | additive | multiplicative
//! sigma2 = 0.0
//!
//! [schedule]
//! kind = "convex"             # convex | strongly-convex | multiplicative-convex
//!                             # | multiplicative-strongly-convex | coordinate
//! clock = "exponential"       # exponential | geometric
//! rate = 1.0                  # exponential
//! p = 0.01                    # geometric
//! tick = 0.01                 # geometric
//!
//! [graph]                     # gossip, decentralized, graph-info
//! topology = "line"           # line | cycle | grid | complete | edge-list
//! nodes = 30                  # line, cycle, complete
//! rows = 15                   # grid
//! cols = 15                   # grid
//! edges = "0 1 0.5\n1 2 0.5"  # edge-list: one `v w p` per line
//!
//! [gossip]
//! algo = "accelerated"        # accelerated | naive | both
//! spike = 0                   # node holding the initial 1, or values = [..]
//!
//! [decentralized]
//! mu = 0.1
//! l = 1.0
//! dimension = 1
//! function_seed = 0           # random curvatures in [mu, l], normal centers
//! # functions = [{ curvature = 0.5, center = [1.0] }, ..]
//! ```
//!
//! Every violation (unknown key, wrong type, missing or out-of-range field)
//! is collected and reported together.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::continuized::{EventClock, ScheduleKind};
use crate::error::{Error, Result};
use crate::gossip::GossipAlgo;
use crate::graphs::{parse_edge_list, Topology, Weights};
use crate::problems::NoiseModel;

pub const DEFAULT_RUNS: usize = 1000;
pub const DEFAULT_CHECKPOINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Optimize,
    Gossip,
    Decentralized,
    GraphInfo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Optimize => "optimize",
            ExperimentKind::Gossip => "gossip",
            ExperimentKind::Decentralized => "decentralized",
            ExperimentKind::GraphInfo => "graph-info",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Optimize, Self::Gossip, Self::Decentralized, Self::GraphInfo].into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoints {
    /// `n` times in `[1, horizon]` (or `(0, horizon]` for linear spacing).
    Count(usize, Spacing),
    Times(Vec<f64>),
}

impl Checkpoints {
    pub fn resolve(&self, horizon: f64) -> Vec<f64> {
        match self {
            Checkpoints::Times(t) => t.clone(),
            Checkpoints::Count(0, _) => Vec::new(),
            Checkpoints::Count(1, _) => vec![horizon],
            Checkpoints::Count(n, Spacing::Linear) => (1..=*n).map(|i| horizon * i as f64 / *n as f64).collect(),
            Checkpoints::Count(n, Spacing::Log) => {
                let lo = horizon.min(1.0).ln();
                let hi = horizon.ln();
                let mut out: Vec<f64> =
                    (0..*n).map(|i| (lo + (hi - lo) * i as f64 / (*n - 1) as f64).exp()).collect();
                out[*n - 1] = horizon;
                out.dedup();
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemFamily {
    Quadratic { diag: Vec<f64>, center: Vec<f64> },
    IllConditioned { dimension: usize },
    ThreeScale { mu: f64, l: f64 },
    LeastSquares { samples: Vec<(Vec<f64>, f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Origin,
    Optimum,
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub family: ProblemFamily,
    pub start: Start,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub clock: EventClock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub topology: Topology,
    pub weights: Weights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GossipChoice {
    One(GossipAlgo),
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GossipInit {
    Spike(usize),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossipSpec {
    pub algo: GossipChoice,
    pub init: GossipInit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionsSpec {
    Random { seed: u64 },
    Explicit(Vec<(f64, Vec<f64>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecentralizedSpec {
    pub mu: f64,
    pub l: f64,
    pub dimension: usize,
    pub functions: FunctionsSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub horizon: f64,
    pub runs: usize,
    pub seed: u64,
    pub checkpoints: Checkpoints,
    pub bounds: bool,
    pub output: Option<PathBuf>,
    pub problem: Option<ProblemSpec>,
    pub noise: NoiseModel,
    pub schedule: ScheduleSpec,
    pub graph: Option<GraphSpec>,
    pub gossip: GossipSpec,
    pub decentralized: Option<DecentralizedSpec>,
}

impl ExperimentSpec {
    pub fn checkpoint_times(&self) -> Vec<f64> {
        self.checkpoints.resolve(self.horizon)
    }

    /// Checks cross-field constraints; called after CLI overrides.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            errors.push(format!("horizon: must be positive and finite, got {}", self.horizon));
        }
        if self.runs == 0 {
            errors.push("runs: must be >= 1".into());
        }
        if let Checkpoints::Times(t) = &self.checkpoints {
            if t.windows(2).any(|w| !(w[1] > w[0])) {
                errors.push("checkpoints: times must be strictly increasing".into());
            }
            if t.iter().any(|x| !(*x >= 0.0)) {
                errors.push("checkpoints: times must be >= 0".into());
            }
            if t.last().is_some_and(|x| *x > self.horizon) {
                errors.push("checkpoints: times must not exceed the horizon".into());
            }
        }
        match self.kind {
            ExperimentKind::Optimize if self.problem.is_none() => errors.push("problem: section required".into()),
            ExperimentKind::Gossip | ExperimentKind::Decentralized | ExperimentKind::GraphInfo
                if self.graph.is_none() =>
            {
                errors.push("graph: section required".into())
            }
            _ => {}
        }
        if self.kind == ExperimentKind::Decentralized && self.decentralized.is_none() {
            errors.push("decentralized: section required".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

/// Typed access to a TOML table that records every problem instead of
/// stopping at the first.
struct Reader {
    errors: Vec<String>,
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

impl Reader {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn known(&mut self, table: &Table, section: &str, keys: &[&str]) {
        for k in table.keys() {
            if !keys.contains(&k.as_str()) {
                let path = if section.is_empty() { k.clone() } else { format!("{section}.{k}") };
                self.err(&path, "unknown key");
            }
        }
    }

    fn path(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        }
    }

    fn float(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        let v = t.get(key)?;
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.err(&Self::path(section, key), format!("expected a number, got {}", type_name(other)));
                None
            }
        }
    }

    fn positive(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        let v = self.float(t, section, key)?;
        if v > 0.0 && v.is_finite() {
            Some(v)
        } else {
            self.err(&Self::path(section, key), format!("must be positive, got {v}"));
            None
        }
    }

    fn required<T>(&mut self, v: Option<T>, t: &Table, section: &str, key: &str) -> Option<T> {
        if v.is_none() && !t.contains_key(key) {
            self.err(&Self::path(section, key), "missing required field");
        }
        v
    }

    fn uint(&mut self, t: &Table, section: &str, key: &str) -> Option<u64> {
        match t.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.err(&Self::path(section, key), format!("must be >= 0, got {i}"));
                None
            }
            other => {
                self.err(&Self::path(section, key), format!("expected an integer, got {}", type_name(other)));
                None
            }
        }
    }

    fn string<'a>(&mut self, t: &'a Table, section: &str, key: &str) -> Option<&'a str> {
        match t.get(key)? {
            Value::String(s) => Some(s),
            other => {
                self.err(&Self::path(section, key), format!("expected a string, got {}", type_name(other)));
                None
            }
        }
    }

    fn boolean(&mut self, t: &Table, section: &str, key: &str) -> Option<bool> {
        match t.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.err(&Self::path(section, key), format!("expected a boolean, got {}", type_name(other)));
                None
            }
        }
    }

    fn floats_of(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.err(path, format!("expected an array of numbers, got {}", type_name(v)));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Value::Float(f) => out.push(*f),
                Value::Integer(i) => out.push(*i as f64),
                other => {
                    self.err(path, format!("expected numbers, found {}", type_name(other)));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn floats(&mut self, t: &Table, section: &str, key: &str) -> Option<Vec<f64>> {
        let v = t.get(key)?;
        self.floats_of(v, &Self::path(section, key))
    }

    fn section<'a>(&mut self, t: &'a Table, key: &str) -> Option<&'a Table> {
        match t.get(key)? {
            Value::Table(s) => Some(s),
            other => {
                self.err(key, format!("expected a table, got {}", type_name(other)));
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, t: &Table, section: &str, key: &str, options: &[(&str, T)]) -> Option<T> {
        let s = self.string(t, section, key)?;
        match options.iter().find(|(name, _)| *name == s) {
            Some((_, v)) => Some(*v),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(&Self::path(section, key), format!("expected one of {}, got `{s}`", names.join(", ")));
                None
            }
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_config_str(&text)
}

/// Parses a configuration. `kind` may be omitted when the caller supplies it
/// through [`parse_config_str_as`].
pub fn parse_config_str(text: &str) -> Result<ExperimentSpec> {
    parse_config_str_as(text, None)
}

pub fn parse_config_str_as(text: &str, default_kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
    let mut r = Reader { errors: Vec::new() };
    r.known(
        &root,
        "",
        &[
            "kind", "horizon", "runs", "seed", "checkpoints", "spacing", "bounds", "output", "problem", "noise",
            "schedule", "graph", "gossip", "decentralized",
        ],
    );

    let kinds = [
        ("optimize", ExperimentKind::Optimize),
        ("gossip", ExperimentKind::Gossip),
        ("decentralized", ExperimentKind::Decentralized),
        ("graph-info", ExperimentKind::GraphInfo),
    ];
    let kind = match (r.choice(&root, "", "kind", &kinds), default_kind) {
        (Some(k), Some(d)) if k != d => {
            r.err("kind", format!("`{}` does not match the `{}` subcommand", k.name(), d.name()));
            Some(d)
        }
        (Some(k), _) => Some(k),
        (None, Some(d)) => Some(d),
        (None, None) => {
            if !root.contains_key("kind") {
                r.err("kind", "missing required field");
            }
            None
        }
    };
    let horizon = match kind {
        Some(ExperimentKind::GraphInfo) => r.float(&root, "", "horizon").unwrap_or(1.0),
        _ => {
            let h = r.float(&root, "", "horizon");
            if let Some(h) = h {
                if !(h > 0.0 && h.is_finite()) {
                    r.err("horizon", format!("must be positive, got {h}"));
                }
            }
            r.required(h, &root, "", "horizon").unwrap_or(1.0)
        }
    };
    let runs = match r.uint(&root, "", "runs") {
        Some(0) => {
            r.err("runs", "must be >= 1");
            1
        }
        Some(n) => n as usize,
        None => DEFAULT_RUNS,
    };
    let seed = r.uint(&root, "", "seed").unwrap_or(0);
    let spacing =
        r.choice(&root, "", "spacing", &[("log", Spacing::Log), ("linear", Spacing::Linear)]).unwrap_or(Spacing::Log);
    let checkpoints = match root.get("checkpoints") {
        None => Checkpoints::Count(DEFAULT_CHECKPOINTS, spacing),
        Some(Value::Integer(n)) if *n >= 0 => Checkpoints::Count(*n as usize, spacing),
        Some(v @ Value::Array(_)) => Checkpoints::Times(r.floats_of(v, "checkpoints").unwrap_or_default()),
        Some(other) => {
            r.err("checkpoints", format!("expected a count or a list of times, got {other}"));
            Checkpoints::Count(DEFAULT_CHECKPOINTS, spacing)
        }
    };
    let bounds = r.boolean(&root, "", "bounds").unwrap_or(false);
    let output = r.string(&root, "", "output").map(PathBuf::from);

    let problem = r.section(&root, "problem").and_then(|t| parse_problem(&mut r, t));
    let noise = r.section(&root, "noise").map(|t| parse_noise(&mut r, t)).unwrap_or(NoiseModel::None);
    let schedule = r.section(&root, "schedule").map(|t| parse_schedule(&mut r, t)).unwrap_or(ScheduleSpec {
        kind: ScheduleKind::Convex,
        clock: EventClock::default(),
    });
    let graph = r.section(&root, "graph").and_then(|t| parse_graph(&mut r, t));
    let gossip = r.section(&root, "gossip").map(|t| parse_gossip(&mut r, t)).unwrap_or(GossipSpec {
        algo: GossipChoice::One(GossipAlgo::Accelerated),
        init: GossipInit::Spike(0),
    });
    let decentralized = r.section(&root, "decentralized").and_then(|t| parse_decentralized(&mut r, t));

    if !r.errors.is_empty() {
        return Err(Error::Config(r.errors));
    }
    let spec = ExperimentSpec {
        kind: kind.expect("reported above"),
        horizon,
        runs,
        seed,
        checkpoints,
        bounds,
        output,
        problem,
        noise,
        schedule,
        graph,
        gossip,
        decentralized,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_problem(r: &mut Reader, t: &Table) -> Option<ProblemSpec> {
    const S: &str = "problem";
    r.known(t, S, &["family", "dimension", "diag", "center", "mu", "l", "samples", "start", "x0"]);
    let families = [
        ("quadratic", 0),
        ("ill-conditioned", 1),
        ("three-scale", 2),
        ("least-squares", 3),
    ];
    let family = r.choice(t, S, "family", &families);
    let family = r.required(family, t, S, "family");
    let family = match family? {
        0 => {
            let diag = r.floats(t, S, "diag");
            let diag = r.required(diag, t, S, "diag");
            let center = r.floats(t, S, "center");
            let center = r.required(center, t, S, "center");
            ProblemFamily::Quadratic { diag: diag?, center: center? }
        }
        1 => {
            let d = r.uint(t, S, "dimension").map(|d| d as usize).unwrap_or(100);
            if d == 0 {
                r.err("problem.dimension", "must be >= 1");
            }
            ProblemFamily::IllConditioned { dimension: d }
        }
        2 => {
            let mu = r.positive(t, S, "mu").unwrap_or(0.01);
            let l = r.positive(t, S, "l").unwrap_or(1.0);
            if mu > l {
                r.err("problem.mu", format!("must not exceed l = {l}"));
            }
            ProblemFamily::ThreeScale { mu, l }
        }
        _ => {
            let Some(Value::Array(items)) = t.get("samples") else {
                r.err("problem.samples", "missing or not an array of tables");
                return None;
            };
            let mut samples = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let sec = format!("problem.samples[{i}]");
                let Value::Table(s) = item else {
                    r.err(&sec, "expected a table");
                    continue;
                };
                r.known(s, &sec, &["a", "b", "weight"]);
                let a = r.floats(s, &sec, "a");
                let a = r.required(a, s, &sec, "a");
                let b = r.float(s, &sec, "b").unwrap_or(0.0);
                let w = r.positive(s, &sec, "weight");
                let w = r.required(w, s, &sec, "weight");
                if let (Some(a), Some(w)) = (a, w) {
                    samples.push((a, b, w));
                }
            }
            ProblemFamily::LeastSquares { samples }
        }
    };
    let start = match (r.string(t, S, "start"), t.get("x0")) {
        (Some(_), Some(_)) => {
            r.err("problem.start", "give either start or x0, not both");
            Start::Origin
        }
        (Some("origin"), None) => Start::Origin,
        (Some("optimum"), None) => Start::Optimum,
        (Some(other), None) => {
            r.err("problem.start", format!("expected origin or optimum, got `{other}`"));
            Start::Origin
        }
        (None, Some(v)) => Start::Point(r.floats_of(v, "problem.x0").unwrap_or_default()),
        (None, None) => Start::Origin,
    };
    Some(ProblemSpec { family, start })
}

fn parse_noise(r: &mut Reader, t: &Table) -> NoiseModel {
    const S: &str = "noise";
    r.known(t, S, &["kind", "sigma2"]);
    let kind = r.choice(t, S, "kind", &[("none", 0), ("additive", 1), ("multiplicative", 2)]).unwrap_or(0);
    match kind {
        1 => {
            let s = r.float(t, S, "sigma2");
            let s = r.required(s, t, S, "sigma2").unwrap_or(0.0);
            if !(s >= 0.0 && s.is_finite()) {
                r.err("noise.sigma2", format!("must be >= 0, got {s}"));
            }
            NoiseModel::Additive { sigma2: s }
        }
        2 => NoiseModel::Multiplicative,
        _ => NoiseModel::None,
    }
}

fn parse_schedule(r: &mut Reader, t: &Table) -> ScheduleSpec {
    const S: &str = "schedule";
    r.known(t, S, &["kind", "clock", "rate", "p", "tick"]);
    let kind = r
        .choice(
            t,
            S,
            "kind",
            &[
                ("convex", ScheduleKind::Convex),
                ("strongly-convex", ScheduleKind::StronglyConvex),
                ("multiplicative-convex", ScheduleKind::MultiplicativeConvex),
                ("multiplicative-strongly-convex", ScheduleKind::MultiplicativeStronglyConvex),
                ("coordinate", ScheduleKind::Coordinate),
            ],
        )
        .unwrap_or(ScheduleKind::Convex);
    let clock = match r.choice(t, S, "clock", &[("exponential", false), ("geometric", true)]) {
        Some(true) => {
            let p = r.float(t, S, "p").unwrap_or(0.01);
            let tick = r.float(t, S, "tick").unwrap_or(p);
            EventClock::geometric(p, tick).unwrap_or_else(|e| {
                r.err("schedule.p", e);
                EventClock::default()
            })
        }
        _ => {
            let rate = r.float(t, S, "rate").unwrap_or(1.0);
            EventClock::exponential(rate).unwrap_or_else(|e| {
                r.err("schedule.rate", e);
                EventClock::default()
            })
        }
    };
    ScheduleSpec { kind, clock }
}

fn parse_graph(r: &mut Reader, t: &Table) -> Option<GraphSpec> {
    const S: &str = "graph";
    r.known(t, S, &["topology", "nodes", "rows", "cols", "edges"]);
    let topo = r.choice(t, S, "topology", &[("line", 0), ("cycle", 1), ("grid", 2), ("complete", 3), ("edge-list", 4)]);
    let topo = r.required(topo, t, S, "topology")?;
    let count = |r: &mut Reader, key: &str| {
        let v = r.uint(t, S, key).map(|n| n as usize);
        r.required(v, t, S, key).unwrap_or(0)
    };
    let (topology, weights) = match topo {
        0 => (Topology::Line(count(r, "nodes")), Weights::Uniform),
        1 => (Topology::Cycle(count(r, "nodes")), Weights::Uniform),
        2 => (Topology::Grid { rows: count(r, "rows"), cols: count(r, "cols") }, Weights::Uniform),
        3 => (Topology::Complete(count(r, "nodes")), Weights::Uniform),
        _ => {
            let text = r.string(t, S, "edges");
            let text = r.required(text, t, S, "edges")?;
            match parse_edge_list(text) {
                Ok(parsed) => parsed,
                Err(Error::Config(msgs)) => {
                    for m in msgs {
                        r.err("graph.edges", m);
                    }
                    return None;
                }
                Err(e) => {
                    r.err("graph.edges", e);
                    return None;
                }
            }
        }
    };
    Some(GraphSpec { topology, weights })
}

fn parse_gossip(r: &mut Reader, t: &Table) -> GossipSpec {
    const S: &str = "gossip";
    r.known(t, S, &["algo", "spike", "values"]);
    let algo = r
        .choice(
            t,
            S,
            "algo",
            &[
                ("accelerated", GossipChoice::One(GossipAlgo::Accelerated)),
                ("naive", GossipChoice::One(GossipAlgo::Naive)),
                ("both", GossipChoice::Both),
            ],
        )
        .unwrap_or(GossipChoice::One(GossipAlgo::Accelerated));
    let init = match (r.uint(t, S, "spike"), r.floats(t, S, "values")) {
        (Some(_), Some(_)) => {
            r.err("gossip.spike", "give either spike or values, not both");
            GossipInit::Spike(0)
        }
        (Some(v), None) => GossipInit::Spike(v as usize),
        (None, Some(vals)) => GossipInit::Values(vals),
        (None, None) => GossipInit::Spike(0),
    };
    GossipSpec { algo, init }
}

fn parse_decentralized(r: &mut Reader, t: &Table) -> Option<DecentralizedSpec> {
    const S: &str = "decentralized";
    r.known(t, S, &["mu", "l", "dimension", "function_seed", "functions"]);
    let mu = r.positive(t, S, "mu");
    let mu = r.required(mu, t, S, "mu");
    let l = r.positive(t, S, "l");
    let l = r.required(l, t, S, "l");
    let dimension = r.uint(t, S, "dimension").unwrap_or(1) as usize;
    if dimension == 0 {
        r.err("decentralized.dimension", "must be >= 1");
    }
    let functions = match t.get("functions") {
        Some(Value::Array(items)) => {
            let mut fs = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let sec = format!("decentralized.functions[{i}]");
                let Value::Table(f) = item else {
                    r.err(&sec, "expected a table");
                    continue;
                };
                r.known(f, &sec, &["curvature", "center"]);
                let c = r.positive(f, &sec, "curvature");
                let c = r.required(c, f, &sec, "curvature");
                let center = r.floats(f, &sec, "center");
                let center = r.required(center, f, &sec, "center");
                if let (Some(c), Some(center)) = (c, center) {
                    fs.push((c, center));
                }
            }
            if t.contains_key("function_seed") {
                r.err("decentralized.function_seed", "conflicts with an explicit function list");
            }
            FunctionsSpec::Explicit(fs)
        }
        Some(_) => {
            r.err("decentralized.functions", "expected an array of tables");
            FunctionsSpec::Explicit(Vec::new())
        }
        None => FunctionsSpec::Random { seed: r.uint(t, S, "function_seed").unwrap_or(0) },
    };
    let (mu, l) = (mu?, l?);
    if mu > l {
        r.err("decentralized.mu", format!("must not exceed l = {l}"));
    }
    Some(DecentralizedSpec { mu, l, dimension, functions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn messages(e: Error) -> Vec<String> {
        match e {
            Error::Config(m) => m,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_optimize_defaults() {
        let spec = parse_config_str("kind = \"optimize\"\nhorizon = 10\n[problem]\nfamily = \"three-scale\"\n").unwrap();
        assert_eq!(spec.runs, 1000);
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.checkpoints, Checkpoints::Count(50, Spacing::Log));
        let times = spec.checkpoint_times();
        assert_eq!(times.len(), 50);
        assert_eq!(times[0], 1.0);
        assert_eq!(times[49], 10.0);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn negative_horizon_names_the_field() {
        let m = messages(parse_config_str("kind = \"optimize\"\nhorizon = -1\n[problem]\nfamily = \"three-scale\"\n").unwrap_err());
        assert!(m.iter().any(|s| s.starts_with("horizon")), "{m:?}");
    }

    #[test]
    fn collects_all_violations() {
        let text = "kind = \"optimize\"\nhorizon = 1\nbogus = 3\nruns = 0\n[problem]\nfamily = \"quadratic\"\nshape = 1\n[noise]\nkind = \"loud\"\n";
        let m = messages(parse_config_str(text).unwrap_err());
        for needle in ["bogus: unknown key", "runs: must be >= 1", "problem.shape: unknown key", "problem.diag: missing", "problem.center: missing", "noise.kind: expected one of"] {
            assert!(m.iter().any(|s| s.starts_with(needle)), "missing `{needle}` in {m:?}");
        }
    }

    #[test]
    fn subcommand_must_agree_with_kind() {
        let err = parse_config_str_as("kind = \"gossip\"\nhorizon = 1\n[graph]\ntopology = \"complete\"\nnodes = 4\n", Some(ExperimentKind::Optimize));
        assert!(messages(err.unwrap_err()).iter().any(|s| s.starts_with("kind:")));
        let ok = parse_config_str_as("horizon = 1\n[graph]\ntopology = \"complete\"\nnodes = 4\n", Some(ExperimentKind::Gossip));
        assert_eq!(ok.unwrap().kind, ExperimentKind::Gossip);
    }

    #[test]
    fn parses_every_section() {
        let text = r#"
kind = "decentralized"
horizon = 50
runs = 3
seed = 9
checkpoints = [1.0, 2.0, 50.0]
bounds = true
output = "x.csv"
[graph]
topology = "edge-list"
edges = "0 1 1\n1 2 3"
[decentralized]
mu = 0.5
l = 2
functions = [{ curvature = 1.0, center = [0.0] }, { curvature = 0.5, center = [1.0] }, { curvature = 2, center = [2.0] }]
"#;
        let spec = parse_config_str(text).unwrap();
        assert_eq!(spec.checkpoint_times(), vec![1.0, 2.0, 50.0]);
        assert_eq!(spec.graph.unwrap().weights, Weights::Explicit(vec![1.0, 3.0]));
        let d = spec.decentralized.unwrap();
        assert!(matches!(d.functions, FunctionsSpec::Explicit(ref f) if f.len() == 3));
        assert_eq!(spec.output, Some(PathBuf::from("x.csv")));
    }

    #[test]
    fn rejects_unordered_checkpoints() {
        let m = messages(
            parse_config_str("kind = \"optimize\"\nhorizon = 5\ncheckpoints = [2.0, 1.0]\n[problem]\nfamily = \"three-scale\"\n")
                .unwrap_err(),
        );
        assert!(m.iter().any(|s| s.starts_with("checkpoints")));
    }

    #[test]
    fn linear_and_log_grids() {
        assert_eq!(Checkpoints::Count(4, Spacing::Linear).resolve(8.0), vec![2.0, 4.0, 6.0, 8.0]);
        let log = Checkpoints::Count(3, Spacing::Log).resolve(100.0);
        assert!((log[1] - 10.0).abs() < 1e-12);
        assert!(Checkpoints::Count(0, Spacing::Log).resolve(5.0).is_empty());
    }
}
