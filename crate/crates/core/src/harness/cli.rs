//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the invocation or configuration is
//! invalid, 2 when a run fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{parse_config_str_as, ExperimentKind, ExperimentSpec, GraphSpec};
use super::csv::render_csv;
use super::presets::{preset, PRESETS};
use super::runset::{graph_of, run_experiment};
use crate::error::{Error, Result};
use crate::graphs::{gossip_rates, Topology, Weights};

pub const SEED_ENV: &str = "CONTINUIZED_SEED";

#[derive(Debug, Parser)]
#[command(name = "continuized", version, about = "Continuized acceleration, gossip and decentralized optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides $CONTINUIZED_SEED and the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// CSV destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continuized acceleration on a convex objective.
    Optimize,
    /// Naive or accelerated randomized gossip.
    Gossip,
    /// Accelerated decentralized optimization on the dual.
    Decentralized,
    /// Spectral quantities and gossip rates of a graph.
    GraphInfo(GraphArgs),
    /// Regenerates a figure as a CSV table.
    Reproduce {
        /// One of the preset names listed by `--help`.
        #[arg(value_name = "PRESET")]
        preset: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TopologyArg {
    Line,
    Cycle,
    Grid,
    Complete,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[arg(long)]
    topology: Option<TopologyArg>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
}

impl GraphArgs {
    fn spec(&self) -> Result<Option<GraphSpec>> {
        let Some(topology) = self.topology else {
            return Ok(None);
        };
        let need = |v: Option<usize>, flag: &str| {
            v.ok_or_else(|| Error::Config(vec![format!("--{flag} is required for this topology")]))
        };
        let topology = match topology {
            TopologyArg::Line => Topology::Line(need(self.nodes, "nodes")?),
            TopologyArg::Cycle => Topology::Cycle(need(self.nodes, "nodes")?),
            TopologyArg::Complete => Topology::Complete(need(self.nodes, "nodes")?),
            TopologyArg::Grid => Topology::Grid { rows: need(self.rows, "rows")?, cols: need(self.cols, "cols")? },
        };
        Ok(Some(GraphSpec { topology, weights: Weights::Uniform }))
    }
}

fn load_config(path: &PathBuf, kind: ExperimentKind) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("--config: cannot read {}: {e}", path.display())]))?;
    parse_config_str_as(&text, Some(kind)).map_err(|e| match e {
        Error::Config(msgs) => Error::Config(msgs.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
        other => other,
    })
}

/// Flag beats environment beats config.
fn apply_overrides(spec: &mut ExperimentSpec, common: &Common, env_seed: Option<&str>) -> Result<()> {
    if let Some(s) = common.seed {
        spec.seed = s;
    } else if let Some(raw) = env_seed {
        spec.seed = raw
            .trim()
            .parse()
            .map_err(|_| Error::Config(vec![format!("{SEED_ENV}: expected an unsigned integer, got `{raw}`")]))?;
    }
    if let Some(r) = common.runs {
        spec.runs = r;
    }
    if let Some(h) = common.horizon {
        spec.horizon = h;
    }
    if let Some(o) = &common.out {
        spec.output = Some(o.clone());
    }
    spec.validate()
}

fn graph_info(spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
    let (graph, cache) = graph_of(spec)?;
    let (theta_rg, theta_arg) = gossip_rates(&cache);
    let fmt = super::csv::format_sig;
    let lines = [
        ("nodes", graph.node_count().to_string()),
        ("edges", graph.edge_count().to_string()),
        ("mu_gossip", fmt(cache.mu_gossip)),
        ("r_max", fmt(cache.r_max)),
        ("theta_rg", fmt(theta_rg)),
        ("theta_arg", fmt(theta_arg)),
    ];
    for (k, v) in lines {
        writeln!(out, "{k:<10} {v}").map_err(|source| Error::Io { path: "stdout".into(), source })?;
    }
    Ok(())
}

fn execute(cli: Cli, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let common = &cli.common;
    let kind = match &cli.command {
        Command::Optimize => ExperimentKind::Optimize,
        Command::Gossip => ExperimentKind::Gossip,
        Command::Decentralized => ExperimentKind::Decentralized,
        Command::GraphInfo(_) => ExperimentKind::GraphInfo,
        Command::Reproduce { .. } => ExperimentKind::Optimize,
    };
    let mut spec = match &cli.command {
        Command::Reproduce { preset: name } => preset(name).ok_or_else(|| {
            Error::Config(vec![format!("unknown preset `{name}`; available: {}", PRESETS.join(", "))])
        })?,
        Command::GraphInfo(args) => match (args.spec()?, &common.config) {
            (Some(graph), _) => ExperimentSpec {
                graph: Some(graph),
                ..preset("appendix-a2-complete10").expect("built-in preset")
            },
            (None, Some(path)) => load_config(path, kind)?,
            (None, None) => return Err(Error::Config(vec!["graph-info needs --topology or --config".into()])),
        },
        _ => match &common.config {
            Some(path) => load_config(path, kind)?,
            None => return Err(Error::Config(vec![format!("--config is required for `{}`", kind.name())])),
        },
    };
    if let Command::GraphInfo(_) = cli.command {
        return graph_info(&spec, out);
    }
    apply_overrides(&mut spec, common, env_seed)?;
    let runset = run_experiment(&spec)?;
    let csv = render_csv(&runset);
    match &spec.output {
        Some(path) => std::fs::write(path, csv).map_err(|source| Error::Io { path: path.display().to_string(), source })?,
        None => out.write_all(csv.as_bytes()).map_err(|source| Error::Io { path: "stdout".into(), source })?,
    }
    if !common.quiet {
        let dest = spec.output.as_ref().map_or("stdout".to_string(), |p| p.display().to_string());
        let _ = writeln!(
            err,
            "{}: {} runs, {} checkpoints, seed {} -> {dest}",
            spec.kind.name(),
            spec.runs,
            runset.times.len(),
            spec.seed
        );
    }
    Ok(())
}

/// Runs the CLI with an explicit environment seed and output streams.
pub fn run_cli<I, T>(argv: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli, env_seed, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_seed = std::env::var(SEED_ENV).ok();
    run_cli(argv, env_seed.as_deref(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
