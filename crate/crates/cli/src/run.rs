//! The `run` and `bounds` commands.

use std::path::{Path, PathBuf};

use arsearch::algorithms::{FirstHit, Runner, Trace, TraceHeader};
use arsearch::bounds::{bound_report, BoundParams, BoundReport};
use arsearch::population::run_population;
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, Resolved};
use crate::{create_dir, write_file, CliError, ExperimentConfig};

/// JSON written next to each trace CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub trace: TraceHeader,
    pub first_hit: Option<FirstHitRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstHitRecord {
    pub iterations: usize,
    pub replications: u64,
}

impl From<FirstHit> for FirstHitRecord {
    fn from(h: FirstHit) -> Self {
        Self {
            iterations: h.iterations,
            replications: h.replications,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub runs: usize,
    pub reached: usize,
    pub target: f64,
    pub mean_iterations: Option<f64>,
    pub mean_replications: Option<f64>,
    pub files: Vec<PathBuf>,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} runs, {} reached y* + eps = {}",
            self.runs, self.reached, self.target
        )?;
        if let (Some(i), Some(r)) = (self.mean_iterations, self.mean_replications) {
            write!(f, "; mean N_I {i:.4}, mean N_R {r:.1} over reaching runs")?;
        }
        Ok(())
    }
}

pub fn trace_stem(stream_id: u64) -> String {
    format!("run-{stream_id:05}")
}

/// Runs `config.run.runs` independent runs and writes their traces into
/// `out`.
pub fn cmd_run(resolved: &Resolved, out: &Path) -> Result<RunSummary, CliError> {
    let geom = resolved.geometry()?;
    let runner =
        Runner::new(&geom, &resolved.algorithm).map_err(|e| CliError::invalid("algorithm", e))?;
    let cfg = &resolved.config;
    let traces = run_population(&runner, cfg.run.seed, cfg.run.runs)?;
    create_dir(out)?;
    let hash = cfg.sha256();
    let target = runner.target();
    let mut files = Vec::new();
    for t in &traces {
        files.extend(write_trace(t, cfg, &hash, target, out)?);
    }
    let hits: Vec<FirstHit> = traces
        .iter()
        .filter_map(|t| t.first_hitting(target))
        .collect();
    let mean = |f: &dyn Fn(&FirstHit) -> f64| {
        (!hits.is_empty()).then(|| hits.iter().map(f).sum::<f64>() / hits.len() as f64)
    };
    Ok(RunSummary {
        runs: traces.len(),
        reached: hits.len(),
        target,
        mean_iterations: mean(&|h| h.iterations as f64),
        mean_replications: mean(&|h| h.replications as f64),
        files,
    })
}

fn write_trace(
    trace: &Trace,
    cfg: &ExperimentConfig,
    hash: &str,
    target: f64,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let stem = trace_stem(trace.stream_id);
    let mut files = Vec::new();
    for format in &cfg.output.formats {
        let (path, body) = match format {
            OutputFormat::Csv => (out.join(format!("{stem}.csv")), trace.to_csv()),
            OutputFormat::Json => {
                let header = RunHeader {
                    config_sha256: hash.to_string(),
                    config: cfg.clone(),
                    trace: trace.header(),
                    first_hit: trace.first_hitting(target).map(Into::into),
                };
                let mut body = serde_json::to_string_pretty(&header).expect("header serializes");
                body.push('\n');
                (out.join(format!("{stem}.json")), body)
            }
        };
        write_file(&path, &body)?;
        files.push(path);
    }
    Ok(files)
}

pub fn cmd_bounds(resolved: &Resolved, with_integral: bool) -> Result<BoundReport, CliError> {
    let geom = resolved.geometry()?;
    let a = &resolved.algorithm;
    let params = BoundParams {
        gamma: a.gamma,
        alpha: a.alpha,
        q: a.q,
        epsilon: a.epsilon,
    };
    bound_report(&geom, params, with_integral).map_err(|e| CliError::invalid("algorithm", e))
}
