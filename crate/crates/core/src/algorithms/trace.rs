use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::AlgorithmConfig;
use crate::problem::BenchmarkProblem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    /// `f(X_k)`.
    pub y_true: f64,
    /// Sample mean at a freshly sampled point; absent on hesitation and for
    /// noiseless variants.
    pub y_est: Option<f64>,
    pub y_high: Option<f64>,
    /// `Ybar_k`, best true value so far.
    pub best_true: f64,
    /// `ybar_k^high`, upper confidence value attached to `Ybar_k`.
    pub best_high: f64,
    pub replications_used: u64,
    pub bettered: bool,
    /// Quantile parameter used to sample this point (QASE only).
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TerminalStatus {
    TargetReached,
    MaxIterations,
    Error { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: AlgorithmConfig,
    pub problem: BenchmarkProblem,
    pub seed: u64,
    pub stream_id: u64,
    /// Constant replication count when the schedule is constant.
    pub replications: Option<u64>,
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
}

/// Run metadata written next to the CSV body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub config: AlgorithmConfig,
    pub problem: BenchmarkProblem,
    pub seed: u64,
    pub stream_id: u64,
    pub replications: Option<u64>,
    pub iterations: usize,
    pub terminal_status: TerminalStatus,
}

pub const CSV_COLUMNS: [&str; 8] = [
    "k",
    "bettered",
    "replications_used",
    "y_true",
    "y_est",
    "y_high",
    "best_true",
    "best_high",
];

/// First-hitting counts: iterations (Step 0 counts as 1) and total
/// replications through that iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FirstHit {
    pub iterations: usize,
    pub replications: u64,
}

impl Trace {
    pub fn header(&self) -> TraceHeader {
        TraceHeader {
            config: self.config.clone(),
            problem: self.problem.clone(),
            seed: self.seed,
            stream_id: self.stream_id,
            replications: self.replications,
            iterations: self.records.len(),
            terminal_status: self.status.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.k,
                r.bettered,
                r.replications_used,
                r.y_true,
                opt(r.y_est),
                opt(r.y_high),
                r.best_true,
                r.best_high
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn first_hitting(&self, target: f64) -> Option<FirstHit> {
        first_hitting(&self.records, target)
    }

    /// `Ybar_k`, carrying the final value forward past the end of the trace.
    pub fn best_true_at(&self, k: usize) -> f64 {
        let last = self.records.len() - 1;
        self.records[k.min(last)].best_true
    }
}

pub fn first_hitting(records: &[IterationRecord], target: f64) -> Option<FirstHit> {
    let mut replications = 0;
    for r in records {
        replications += r.replications_used;
        if r.best_true <= target {
            return Some(FirstHit {
                iterations: r.k + 1,
                replications,
            });
        }
    }
    None
}
