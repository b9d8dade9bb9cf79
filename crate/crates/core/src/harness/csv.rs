//! CSV emission of aggregates and raw per-run values.

use std::fmt::Write as _;
use std::path::Path;

use super::runset::{summarize, MetricSummary, RunSet, Stats};
use crate::error::{Error, Result};

pub const HEADER: &str = "t,metric,mean,q05,q95";

/// `%.12g`: 12 significant digits, trailing zeros dropped, scientific
/// notation outside `[1e-4, 1e12)`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Rounding can bump the exponent, so read it off the rounded form.
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// The aggregate table: one row per `(checkpoint, metric)`, checkpoint-major.
/// A `bound` column is appended when any metric carries a reference curve;
/// metrics without one leave it empty.
pub fn render_csv(runset: &RunSet) -> String {
    let with_bounds = runset.summaries.iter().any(|s| s.bound.is_some());
    let mut out = String::from(HEADER);
    if with_bounds {
        out.push_str(",bound");
    }
    out.push('\n');
    for (j, t) in runset.times.iter().enumerate() {
        for s in &runset.summaries {
            let st = &s.stats[j];
            let _ = write!(
                out,
                "{},{},{},{},{}",
                format_sig(*t),
                s.name,
                format_sig(st.mean),
                format_sig(st.q05),
                format_sig(st.q95)
            );
            if with_bounds {
                out.push(',');
                if let Some(b) = &s.bound {
                    out.push_str(&format_sig(b[j]));
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn emit_csv(runset: &RunSet, path: &Path) -> Result<()> {
    write_file(path, &render_csv(runset))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub metric: String,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
    pub bound: Option<f64>,
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.parse().map_err(|_| Error::Config(vec![format!("line {line}: `{field}` is not a number")]))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let with_bounds = match header {
        HEADER => false,
        h if h == format!("{HEADER},bound") => true,
        other => return Err(Error::Config(vec![format!("line 1: unexpected header `{other}`")])),
    };
    let width = if with_bounds { 6 } else { 5 };
    lines
        .enumerate()
        .map(|(i, line)| {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != width {
                return Err(Error::Config(vec![format!("line {n}: expected {width} fields, got {}", f.len())]));
            }
            let bound = match f.get(5) {
                Some(b) if !b.is_empty() => Some(parse_f64(b, n)?),
                _ => None,
            };
            Ok(CsvRow {
                t: parse_f64(f[0], n)?,
                metric: f[1].to_string(),
                mean: parse_f64(f[2], n)?,
                q05: parse_f64(f[3], n)?,
                q95: parse_f64(f[4], n)?,
                bound,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    parse_csv(&read_file(path)?)
}

pub const RUNS_HEADER: &str = "run,t,metric,value";

/// Every checkpoint value of every run at full precision (shortest
/// round-trip representation), for re-aggregation elsewhere.
pub fn render_runs_csv(runset: &RunSet) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for (run, trace) in runset.traces.iter().enumerate() {
        for sample in trace.checkpoints() {
            for (name, v) in trace.metrics.iter().zip(&sample.values) {
                let _ = writeln!(out, "{run},{:?},{name},{:?}", sample.t, v);
            }
        }
    }
    out
}

pub fn emit_runs_csv(runset: &RunSet, path: &Path) -> Result<()> {
    write_file(path, &render_runs_csv(runset))
}

/// Rebuilds the per-metric aggregates from a raw-values table. Metrics and
/// times keep their order of first appearance; values are reduced in run order.
pub fn aggregate_runs_csv(text: &str) -> Result<(Vec<f64>, Vec<MetricSummary>)> {
    let mut lines = text.lines();
    if lines.next() != Some(RUNS_HEADER) {
        return Err(Error::Config(vec!["line 1: expected the per-run header".into()]));
    }
    let mut times: Vec<f64> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut cells: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Config(vec![format!("line {n}: expected 4 fields, got {}", f.len())]));
        }
        let run: usize = f[0].parse().map_err(|_| Error::Config(vec![format!("line {n}: bad run index")]))?;
        let t = parse_f64(f[1], n)?;
        let v = parse_f64(f[3], n)?;
        let j = times.iter().position(|x| *x == t).unwrap_or_else(|| {
            times.push(t);
            for c in cells.iter_mut() {
                c.push(Vec::new());
            }
            times.len() - 1
        });
        let m = names.iter().position(|x| x == f[2]).unwrap_or_else(|| {
            names.push(f[2].to_string());
            cells.push(vec![Vec::new(); times.len()]);
            names.len() - 1
        });
        cells[m][j].push((run, v));
    }
    let summaries = names
        .into_iter()
        .zip(cells)
        .map(|(name, cols)| {
            let stats: Vec<Stats> = cols
                .into_iter()
                .map(|mut c| {
                    c.sort_by_key(|(run, _)| *run);
                    summarize(&c.into_iter().map(|(_, v)| v).collect::<Vec<_>>())
                })
                .collect();
            MetricSummary { name, stats, bound: None }
        })
        .collect();
    Ok((times, summaries))
}
