//! The `plot-data` command: tidy long-format CSV (`series,x,y`) for
//! external plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use arsearch::bounds::{bound_report, BoundParams};
use arsearch::verification::linear_grid;
use serde::Deserialize;

use crate::config::Resolved;
use crate::run::RunHeader;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    TracePanel,
    CdfPanel,
    RatioCurve,
    BoundVsEmpirical,
}

impl PlotKind {
    pub const NAMES: [&'static str; 4] = [
        "trace-panel",
        "cdf-panel",
        "ratio-curve",
        "bound-vs-empirical",
    ];
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "trace-panel" => Ok(PlotKind::TracePanel),
            "cdf-panel" => Ok(PlotKind::CdfPanel),
            "ratio-curve" => Ok(PlotKind::RatioCurve),
            "bound-vs-empirical" => Ok(PlotKind::BoundVsEmpirical),
            _ => Err(format!(
                "unknown plot kind `{s}`; expected one of {}",
                Self::NAMES.join(", ")
            )),
        }
    }
}

/// One row of a trace CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub bettered: bool,
    pub replications_used: u64,
    pub y_true: f64,
    pub y_est: Option<f64>,
    pub y_high: Option<f64>,
    pub best_true: f64,
    pub best_high: f64,
}

/// A trace read back from a run directory.
#[derive(Clone, Debug)]
pub struct LoadedTrace {
    pub name: String,
    pub rows: Vec<TraceRow>,
    pub header: Option<RunHeader>,
}

impl LoadedTrace {
    fn best_at(&self, k: usize) -> f64 {
        self.rows[k.min(self.rows.len() - 1)].best_true
    }

    /// First-hitting iteration count and replications through it.
    fn first_hit(&self, target: f64) -> Option<(usize, u64)> {
        let mut reps = 0;
        for r in &self.rows {
            reps += r.replications_used;
            if r.best_true <= target {
                return Some((r.k + 1, reps));
            }
        }
        None
    }
}

/// Reads every `*.csv` trace in `dir` in name order, with its JSON header
/// when present.
pub fn load_traces(dir: &Path) -> Result<Vec<LoadedTrace>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut traces = Vec::new();
    for path in paths {
        let mut reader = csv::Reader::from_path(&path).map_err(|e| CliError::Trace {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let rows = reader
            .deserialize()
            .collect::<Result<Vec<TraceRow>, _>>()
            .map_err(|e| CliError::Trace {
                path: path.clone(),
                message: e.to_string(),
            })?;
        if rows.is_empty() || rows.iter().enumerate().any(|(i, r)| r.k != i) {
            return Err(CliError::Trace {
                path,
                message: "iterations must be numbered 0, 1, 2, ...".into(),
            });
        }
        let json = path.with_extension("json");
        let header = if json.exists() {
            let text = std::fs::read_to_string(&json).map_err(|e| CliError::io(&json, e))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Trace {
                path: json.clone(),
                message: e.to_string(),
            })?)
        } else {
            None
        };
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        traces.push(LoadedTrace { name, rows, header });
    }
    if traces.is_empty() {
        return Err(CliError::Trace {
            path: dir.to_path_buf(),
            message: "no trace CSV files found".into(),
        });
    }
    Ok(traces)
}

fn header_of<'a>(traces: &'a [LoadedTrace], dir: &Path) -> Result<&'a RunHeader, CliError> {
    traces[0].header.as_ref().ok_or_else(|| CliError::Trace {
        path: dir.to_path_buf(),
        message: "JSON run header required for this plot".into(),
    })
}

fn push(out: &mut String, series: &str, x: f64, y: f64) {
    writeln!(out, "{series},{x},{y}").expect("writing to a String");
}

fn table() -> String {
    String::from("series,x,y\n")
}

#[derive(Clone, Debug, Default)]
pub struct PlotOptions {
    pub traces: Option<PathBuf>,
    pub traces_b: Option<PathBuf>,
    pub config: Option<Resolved>,
    pub points: Option<usize>,
    pub k_max: Option<usize>,
}

pub fn cmd_plot_data(kind: PlotKind, opts: &PlotOptions) -> Result<String, CliError> {
    let need_dir = |d: &Option<PathBuf>, flag: &str| {
        d.clone().ok_or_else(|| CliError::Config {
            path: flag.into(),
            message: "required for this plot kind".into(),
        })
    };
    match kind {
        PlotKind::TracePanel => {
            let dir = need_dir(&opts.traces, "--traces")?;
            Ok(trace_panel(&load_traces(&dir)?))
        }
        PlotKind::CdfPanel => {
            let a_dir = need_dir(&opts.traces, "--traces")?;
            let b_dir = need_dir(&opts.traces_b, "--traces-b")?;
            let (a, b) = (load_traces(&a_dir)?, load_traces(&b_dir)?);
            let header = header_of(&a, &a_dir)?;
            let label = |t: &[LoadedTrace], fallback: &str| {
                t[0].header
                    .as_ref()
                    .map(|h| h.trace.config.variant.name().to_string())
                    .unwrap_or_else(|| fallback.to_string())
            };
            let (la, mut lb) = (label(&a, "a"), label(&b, "b"));
            if la == lb {
                lb.push_str("-b");
            }
            let p = &header.trace.problem;
            let y_lo = p.y_star + header.trace.config.epsilon;
            let grid = linear_grid(y_lo, p.y_max, opts.points.unwrap_or(50));
            let k_max = opts.k_max.unwrap_or(header.config.run.k_max);
            Ok(cdf_panel(
                &[(la.as_str(), &a), (lb.as_str(), &b)],
                k_max,
                &grid,
            ))
        }
        PlotKind::RatioCurve => {
            let resolved = opts.config.as_ref().ok_or_else(|| CliError::Config {
                path: "--config".into(),
                message: "required for ratio-curve".into(),
            })?;
            ratio_curve(resolved, opts.points.unwrap_or(50))
        }
        PlotKind::BoundVsEmpirical => {
            let dir = need_dir(&opts.traces, "--traces")?;
            let traces = load_traces(&dir)?;
            let header = header_of(&traces, &dir)?.clone();
            bound_vs_empirical(&traces, &header)
        }
    }
}

type Column = fn(&TraceRow) -> Option<f64>;

pub fn trace_panel(traces: &[LoadedTrace]) -> String {
    let mut out = table();
    let prefix = |t: &LoadedTrace, s: &str| {
        if traces.len() == 1 {
            s.to_string()
        } else {
            format!("{}:{s}", t.name)
        }
    };
    for t in traces {
        let columns: [(&str, Column); 5] = [
            ("y_true", |r| Some(r.y_true)),
            ("y_est", |r| r.y_est),
            ("y_high", |r| r.y_high),
            ("best_true", |r| Some(r.best_true)),
            ("best_high", |r| Some(r.best_high)),
        ];
        for (name, get) in columns {
            let series = prefix(t, name);
            for r in &t.rows {
                if let Some(v) = get(r) {
                    push(&mut out, &series, r.k as f64, v);
                }
            }
        }
    }
    out
}

pub fn cdf_panel(populations: &[(&str, &Vec<LoadedTrace>)], k_max: usize, grid: &[f64]) -> String {
    let mut out = table();
    for (label, traces) in populations {
        for k in 0..=k_max {
            let mut col: Vec<f64> = traces.iter().map(|t| t.best_at(k)).collect();
            col.sort_by(f64::total_cmp);
            let series = format!("{label}:k={k}");
            for &y in grid {
                let cdf = col.partition_point(|v| *v <= y) as f64 / col.len() as f64;
                push(&mut out, &series, y, cdf);
            }
        }
    }
    out
}

/// `nu(S_y) / nu(S_{y + Delta})` against `Delta` for three levels `y`.
pub fn ratio_curve(resolved: &Resolved, points: usize) -> Result<String, CliError> {
    let geom = resolved.geometry()?;
    let p = &resolved.problem;
    let span = p.y_max - p.y_star;
    let mut out = table();
    for frac in [0.1, 0.25, 0.5] {
        let y = p.y_star + frac * span;
        let series = format!("y={y}");
        for delta in linear_grid(0.0, p.y_max - y, points) {
            let ratio = geom.volume_ratio(y, (y + delta).min(p.y_max))?;
            push(&mut out, &series, delta, ratio);
        }
    }
    Ok(out)
}

/// Running means of the first-hitting counts against their bounds, by the
/// number of runs included.
pub fn bound_vs_empirical(traces: &[LoadedTrace], header: &RunHeader) -> Result<String, CliError> {
    let resolved = header.config.resolve()?;
    let geom = resolved.geometry()?;
    let a = &resolved.algorithm;
    let params = BoundParams {
        gamma: a.gamma,
        alpha: a.alpha,
        q: a.q,
        epsilon: a.epsilon,
    };
    let rep = bound_report(&geom, params, false).map_err(|e| CliError::invalid("algorithm", e))?;
    let target = resolved.problem.y_star + a.epsilon;
    let mut hits = Vec::with_capacity(traces.len());
    for t in traces {
        hits.push(t.first_hit(target).ok_or_else(|| CliError::Trace {
            path: PathBuf::from(&t.name),
            message: format!("never reached the target {target}"),
        })?);
    }
    let estimating = a.variant.estimates();
    let mut out = table();
    let (mut sum_i, mut sum_r) = (0.0, 0.0);
    for (m, (iters, reps)) in hits.iter().enumerate() {
        let runs = (m + 1) as f64;
        sum_i += *iters as f64;
        sum_r += *reps as f64;
        push(&mut out, "N_I-mean", runs, sum_i / runs);
        push(&mut out, "N_I-bound", runs, rep.iteration_bound);
        if estimating {
            push(&mut out, "N_R-mean", runs, sum_r / runs);
            push(&mut out, "N_R-bound", runs, rep.evaluation_bound);
        }
    }
    Ok(out)
}
