//! Named experiments that regenerate each figure family as a data table.

use super::config::{
    Checkpoints, DecentralizedSpec, ExperimentKind, ExperimentSpec, FunctionsSpec, GossipChoice, GossipInit,
    GossipSpec, GraphSpec, ProblemFamily, ProblemSpec, ScheduleSpec, Spacing, Start, DEFAULT_CHECKPOINTS,
};
use crate::continuized::{EventClock, ScheduleKind};
use crate::gossip::GossipAlgo;
use crate::graphs::{Topology, Weights};
use crate::problems::NoiseModel;

pub const PRESETS: [&str; 8] = [
    "appendix-a1-convex",
    "appendix-a1-strongly-convex",
    "appendix-b-additive-convex",
    "appendix-b-additive-strongly-convex",
    "appendix-a2-line30",
    "appendix-a2-grid225",
    "appendix-a2-complete10",
    "decentralized-line10",
];

fn base(kind: ExperimentKind, horizon: f64, runs: usize, spacing: Spacing) -> ExperimentSpec {
    ExperimentSpec {
        kind,
        horizon,
        runs,
        seed: 0,
        checkpoints: Checkpoints::Count(DEFAULT_CHECKPOINTS, spacing),
        bounds: true,
        output: None,
        problem: None,
        noise: NoiseModel::None,
        schedule: ScheduleSpec { kind: ScheduleKind::Convex, clock: EventClock::default() },
        graph: None,
        gossip: GossipSpec { algo: GossipChoice::One(GossipAlgo::Accelerated), init: GossipInit::Spike(0) },
        decentralized: None,
    }
}

fn optimize(family: ProblemFamily, kind: ScheduleKind, horizon: f64, runs: usize) -> ExperimentSpec {
    ExperimentSpec {
        problem: Some(ProblemSpec { family, start: Start::Origin }),
        schedule: ScheduleSpec { kind, clock: EventClock::default() },
        ..base(ExperimentKind::Optimize, horizon, runs, Spacing::Log)
    }
}

/// Isotropic noise with per-coordinate variance 1e-4, started at the optimum.
fn additive(mut spec: ExperimentSpec, dimension: usize) -> ExperimentSpec {
    spec.noise = NoiseModel::Additive { sigma2: 1e-4 * dimension as f64 };
    if let Some(p) = spec.problem.as_mut() {
        p.start = Start::Optimum;
    }
    spec
}

/// Both algorithms on one event stream, from a unit spike at node 0.
fn gossip(topology: Topology, horizon: f64) -> ExperimentSpec {
    ExperimentSpec {
        graph: Some(GraphSpec { topology, weights: Weights::Uniform }),
        gossip: GossipSpec { algo: GossipChoice::Both, init: GossipInit::Spike(0) },
        ..base(ExperimentKind::Gossip, horizon, 1000, Spacing::Linear)
    }
}

pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let convex = || ProblemFamily::IllConditioned { dimension: 100 };
    let strongly = || ProblemFamily::ThreeScale { mu: 0.01, l: 1.0 };
    Some(match name {
        "appendix-a1-convex" => optimize(convex(), ScheduleKind::Convex, 100.0, 1000),
        "appendix-a1-strongly-convex" => optimize(strongly(), ScheduleKind::StronglyConvex, 300.0, 1000),
        "appendix-b-additive-convex" => additive(optimize(convex(), ScheduleKind::Convex, 100.0, 100), 100),
        "appendix-b-additive-strongly-convex" => {
            additive(optimize(strongly(), ScheduleKind::StronglyConvex, 300.0, 100), 3)
        }
        "appendix-a2-line30" => gossip(Topology::Line(30), 3000.0),
        "appendix-a2-grid225" => gossip(Topology::Grid { rows: 15, cols: 15 }, 12000.0),
        "appendix-a2-complete10" => gossip(Topology::Complete(10), 100.0),
        "decentralized-line10" => ExperimentSpec {
            graph: Some(GraphSpec { topology: Topology::Line(10), weights: Weights::Uniform }),
            decentralized: Some(DecentralizedSpec {
                mu: 0.1,
                l: 1.0,
                dimension: 1,
                functions: FunctionsSpec::Random { seed: 0 },
            }),
            bounds: false,
            ..base(ExperimentKind::Decentralized, 3000.0, 500, Spacing::Linear)
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            let spec = preset(name).unwrap();
            spec.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("appendix-z").is_none());
    }

    #[test]
    fn strongly_convex_figure_setup() {
        let spec = preset("appendix-a1-strongly-convex").unwrap();
        assert_eq!(spec.runs, 1000);
        assert_eq!(spec.problem.unwrap().family, ProblemFamily::ThreeScale { mu: 0.01, l: 1.0 });
        assert_eq!(spec.schedule.kind, ScheduleKind::StronglyConvex);
    }

    #[test]
    fn additive_noise_matches_per_coordinate_variance() {
        let spec = preset("appendix-b-additive-convex").unwrap();
        let NoiseModel::Additive { sigma2 } = spec.noise else { panic!("expected additive noise") };
        assert!((sigma2 - 1e-2).abs() < 1e-15);
        assert_eq!(spec.problem.unwrap().start, Start::Optimum);
    }
}
