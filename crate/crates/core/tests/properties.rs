//! Cross-module properties: gossip as a special case of the continuized
//! optimizer, clock interpolation, and harness round trips.

use nalgebra::{DMatrix, DVector};

use continuized::continuized::{replay_continuized, run_continuized, EventClock, ParamSchedule, RunOptions, ScheduleKind};
use continuized::events::{record, PoissonMarks};
use continuized::gossip::{averaging_problem, run_gossip_events, GossipOptions, GossipParams};
use continuized::graphs::{build_graph, gossip_rates, spectral, Topology, Weights};
use continuized::harness::csv::{aggregate_runs_csv, emit_csv, emit_runs_csv, read_csv};
use continuized::harness::{preset, run_cli, run_experiment};
use continuized::problems::{three_scale_quadratic, ConvexProblem, NoiseModel};
use continuized::rng::{derive_seed, stream, CLOCK_STREAM};

#[test]
fn accelerated_gossip_is_the_multiplicative_optimizer() {
    for topo in [Topology::Line(9), Topology::Cycle(7), Topology::Complete(5)] {
        let g = build_graph(&topo, Weights::Uniform).unwrap();
        let c = spectral(&g).unwrap();
        let n = g.node_count();
        let x0 = DVector::from_fn(n, |v, _| ((3 * v) % 5) as f64 - 1.0);
        let ls = averaging_problem(&g).unwrap().anchored_at(&x0).unwrap();
        assert!((ls.r_squared() - 2.0).abs() < 1e-10);
        assert!((ls.kappa_tilde() - c.r_max).abs() < 1e-9);
        let problem = ConvexProblem::LeastSquares(ls);
        let schedule = ParamSchedule::for_problem(ScheduleKind::MultiplicativeStronglyConvex, &problem).unwrap();
        for seed in 0..10 {
            let mut source = PoissonMarks::new(EventClock::default(), g.sampler(), stream(seed, CLOCK_STREAM));
            let events = record(&mut source, 150.0);
            let generic =
                replay_continuized(&problem, &schedule, &RunOptions::new(150.0, x0.clone()).with_snapshots(), &events)
                    .unwrap();
            let mut opts = GossipOptions::new(150.0, vec![]);
            opts.record_snapshots = true;
            let gossip = run_gossip_events(
                &g,
                &GossipParams::accelerated(&c),
                DMatrix::from_column_slice(n, 1, x0.as_slice()),
                &opts,
                &mut continuized::events::Replay::new(&events),
            )
            .unwrap();
            assert_eq!(generic.snapshots.len(), events.len());
            assert_eq!(gossip.snapshots.len(), events.len());
            for (a, b) in generic.snapshots.iter().zip(&gossip.snapshots) {
                assert_eq!(a.t, b.t);
                for (u, v) in [(&a.x, &b.x), (&a.z, &b.z), (&a.pre_jump_x, &b.pre_jump_x)] {
                    assert!((u - v).amax() <= 1e-12, "{topo:?} seed {seed} event {}: {}", a.k, (u - v).amax());
                }
            }
        }
    }
}

/// The gap at t = 20 is heavy tailed (a few runs with long event droughts
/// dominate the mean), so the comparison needs a large coupled sample.
#[test]
fn fine_geometric_clock_tracks_the_exponential_one() {
    let problem = three_scale_quadratic(0.01, 1.0).unwrap();
    let schedule = ParamSchedule::strongly_convex(1.0, 0.01).unwrap();
    let opts = RunOptions::new(20.0, DVector::zeros(3)).with_checkpoints(vec![20.0]);
    const RUNS: u64 = 20_000;
    let mean_gap = |clock: EventClock| {
        let total: f64 = (0..RUNS)
            .map(|i| {
                let t = run_continuized(&problem, &NoiseModel::None, &schedule, &clock, &opts, derive_seed(1, i)).unwrap();
                t.checkpoint_series("gap")[0].1
            })
            .sum();
        total / RUNS as f64
    };
    let exp = mean_gap(EventClock::exponential(1.0).unwrap());
    let geo = mean_gap(EventClock::geometric(1e-2, 1e-2).unwrap());
    assert!((geo - exp).abs() <= 0.05 * exp, "geometric {geo} vs exponential {exp}");
}

#[test]
fn csv_round_trip_reaggregates_the_gossip_preset() {
    let spec = preset("appendix-a2-complete10").unwrap();
    let rs = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let raw = dir.path().join("runs.csv");
    emit_runs_csv(&rs, &raw).unwrap();
    let (times, summaries) = aggregate_runs_csv(&std::fs::read_to_string(&raw).unwrap()).unwrap();
    assert_eq!(times, rs.times);
    for (a, b) in summaries.iter().zip(&rs.summaries) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.stats, b.stats);
    }

    let table = dir.path().join("agg.csv");
    emit_csv(&rs, &table).unwrap();
    let rows = read_csv(&table).unwrap();
    assert_eq!(rows.len(), rs.times.len() * rs.summaries.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-11 * b.abs().max(1e-300);
    for (i, row) in rows.iter().enumerate() {
        let (j, m) = (i / rs.summaries.len(), i % rs.summaries.len());
        let s = &rs.summaries[m];
        assert_eq!(row.metric, s.name);
        assert!(close(row.t, rs.times[j]));
        assert!(close(row.mean, s.stats[j].mean) && close(row.q05, s.stats[j].q05) && close(row.q95, s.stats[j].q95));
        assert!(close(row.bound.unwrap(), s.bound.as_ref().unwrap()[j]));
    }
}

#[test]
fn reproduce_convex_figure_from_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a1.csv");
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let code = run_cli(
        ["continuized", "reproduce", "appendix-a1-convex", "--out", out.to_str().unwrap()],
        None,
        &mut stdout,
        &mut stderr,
    );
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&stderr));
    let rows = read_csv(&out).unwrap();
    // Three metrics on 50 checkpoints.
    assert_eq!(rows.len(), 150);
    assert!(String::from_utf8_lossy(&stderr).contains("1000 runs"));
}

/// The √2 comparison between the two gossip rates, checked literally. It
/// cannot hold on complete graphs, where θ_ARG = θ_RG/2.
#[test]
#[ignore = "false on complete graphs; see the acceptance suite"]
fn accelerated_rate_within_root_two_of_naive_on_presets() {
    for topo in [Topology::Line(30), Topology::Grid { rows: 15, cols: 15 }, Topology::Complete(10)] {
        let (rg, arg) = gossip_rates(&spectral(&build_graph(&topo, Weights::Uniform).unwrap()).unwrap());
        assert!(arg >= rg / 2f64.sqrt(), "{topo:?}: {arg} < {}", rg / 2f64.sqrt());
    }
}
