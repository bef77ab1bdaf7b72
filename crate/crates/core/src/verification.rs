//! Monte Carlo checks of the analytic guarantees: the replication-count
//! volume-ratio guarantee, stochastic dominance over the reference
//! processes, expectation bounds, the linear bound on `a^(1/n)/(1-a^(1/n))`,
//! confidence-interval coverage, and audits of the sampling assumptions.
//!
//! Every statistical verdict states its margin. Trial `i` of any check uses
//! stream id `i` of the check's seed, so reports are reproducible.

use serde::Serialize;

use crate::algorithms::{theorem_replications, Runner, Trace, Variant};
use crate::error::{check_range, Error, Result};
use crate::estimation::{ci_event_holds, estimate_at, EstimateConfig, EstimatorMode};
use crate::geometry::{lemma2_linear_bound, root_ratio, LevelSetGeometry};
use crate::population::par_map;
use crate::problem::BenchmarkProblem;
use crate::rng::RandomStream;
use crate::samplers::{sample_quantile_mixture, sample_uniform, SamplerConfig};

/// Minimum number of trials that must survive conditioning on the CI event.
pub const MIN_CONDITIONED_TRIALS: usize = 100;

/// `sqrt(ln(2 / c) / (2 M))`, the DKW band half-width at confidence `1 - c`.
pub fn dkw_margin(runs: usize, confidence_complement: f64) -> f64 {
    ((2.0 / confidence_complement).ln() / (2.0 * runs as f64)).sqrt()
}

/// Fraction of `sorted` that is `<= y`.
fn ecdf(sorted: &[f64], y: f64) -> f64 {
    sorted.partition_point(|v| *v <= y) as f64 / sorted.len() as f64
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Evenly spaced grid with `points` values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Volume-ratio guarantee

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub n: usize,
    pub q: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub replications_theorem: u64,
    /// Divisor applied to the replication count (1 for the real check).
    pub replication_divisor: f64,
    pub replications_used: u64,
    pub trials: usize,
    pub conditioned: usize,
    pub violations: usize,
    pub pass_fraction: f64,
    pub min_ratio: f64,
    pub pass: bool,
}

/// Draws `trials` points with `f > y_star + epsilon`, estimates each with
/// the theorem replication count divided by `replication_divisor`, keeps
/// the trials where the two-sided CI event holds and checks
/// `nu(S_y) / nu(S_{y_high}) >= q` on every one of them.
pub fn check_theorem1(
    geom: &LevelSetGeometry,
    q: f64,
    epsilon: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
    replication_divisor: f64,
) -> Result<Theorem1Report> {
    check_range(
        "replication_divisor",
        replication_divisor,
        replication_divisor >= 1.0,
        ">= 1",
    )?;
    let p = geom.problem();
    let est = EstimateConfig::new(alpha, p.sigma())?;
    let r_theorem = theorem_replications(geom, q, alpha, epsilon)?;
    let reps = ((r_theorem as f64 / replication_divisor).floor() as u64).max(1);
    let target = p.y_star + epsilon;
    let outcomes = par_map(trials, |i| -> Result<Option<f64>> {
        let stream = RandomStream::new(seed, i as u64);
        let mut sampling = stream.lane(0);
        let mut noise = stream.lane(1);
        let y = loop {
            let x = sample_uniform(&p.domain, &mut sampling);
            let y = p.objective.value(&x);
            if y > target {
                break y;
            }
        };
        let e = estimate_at(p, y, reps, &est, EstimatorMode::Aggregate, &mut noise)?;
        if !ci_event_holds(y, &e) {
            return Ok(None);
        }
        Ok(Some(geom.volume_ratio(y, e.upper.min(p.y_max))?))
    });
    let mut ratios = Vec::with_capacity(trials);
    for o in outcomes {
        if let Some(r) = o? {
            ratios.push(r);
        }
    }
    if ratios.len() < MIN_CONDITIONED_TRIALS {
        return Err(Error::InsufficientConditionedTrials {
            got: ratios.len(),
            needed: MIN_CONDITIONED_TRIALS,
        });
    }
    let violations = ratios.iter().filter(|r| **r < q).count();
    let conditioned = ratios.len();
    Ok(Theorem1Report {
        n: p.dimension(),
        q,
        epsilon,
        alpha,
        sigma: p.sigma(),
        replications_theorem: r_theorem,
        replication_divisor,
        replications_used: reps,
        trials,
        conditioned,
        violations,
        pass_fraction: (conditioned - violations) as f64 / conditioned as f64,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        pass: violations == 0,
    })
}

// ---------------------------------------------------------------------------
// Stochastic dominance

/// The records `Ybar_0..=Ybar_{k_max}` of a set of runs, stored column-wise
/// and sorted for empirical CDF queries.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub label: String,
    pub variant: Variant,
    pub problem: BenchmarkProblem,
    pub gamma: f64,
    pub alpha: f64,
    pub q: f64,
    pub epsilon: f64,
    pub runs: usize,
    pub k_max: usize,
    /// CDF values are exact for `y` at or above this level. Runs that ended
    /// before `k_max` carry their final record forward, which is exact only
    /// where that record already lies below `y`.
    pub valid_above: f64,
    columns: Vec<Vec<f64>>,
}

impl Population {
    pub fn from_traces(label: impl Into<String>, traces: &[Trace], k_max: usize) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::PopulationMismatch("empty population".into()))?;
        let cfg = &first.config;
        let base = first.problem.with_sigma(0.0);
        let mut valid_above = f64::NEG_INFINITY;
        for t in traces {
            if t.problem.with_sigma(0.0) != base || t.config != *cfg {
                return Err(Error::PopulationMismatch(
                    "traces disagree on problem or configuration".into(),
                ));
            }
            if t.records.is_empty() {
                return Err(Error::PopulationMismatch("trace without records".into()));
            }
            if t.records.len() <= k_max {
                valid_above = valid_above.max(t.records.last().expect("nonempty").best_true);
            }
        }
        let columns = (0..=k_max)
            .map(|k| {
                let mut col: Vec<f64> = traces.iter().map(|t| t.best_true_at(k)).collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Ok(Self {
            label: label.into(),
            variant: cfg.variant,
            problem: first.problem.clone(),
            gamma: cfg.gamma,
            alpha: cfg.alpha,
            q: cfg.q,
            epsilon: cfg.epsilon,
            runs: traces.len(),
            k_max,
            valid_above,
            columns,
        })
    }

    /// Empirical `P(Ybar_k <= y)`.
    pub fn cdf(&self, k: usize, y: f64) -> f64 {
        ecdf(&self.columns[k], y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub k: usize,
    pub y: f64,
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub label_a: String,
    pub label_b: String,
    pub runs_a: usize,
    pub runs_b: usize,
    pub ks: Vec<usize>,
    pub y_grid: Vec<f64>,
    /// `cdf_a[k][j]` is the empirical `P(Ybar_k <= y_grid[j])`.
    pub cdf_a: Vec<Vec<f64>>,
    pub cdf_b: Vec<Vec<f64>>,
    pub confidence_complement: f64,
    pub dkw_margin_a: f64,
    pub dkw_margin_b: f64,
    /// Sum of both DKW margins (twice the margin for equal run counts).
    pub tolerance: f64,
    /// Largest `cdf_b - cdf_a` over the grid.
    pub max_deficit: f64,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

/// Checks `cdf_a(k, y) >= cdf_b(k, y) - tolerance` for `k <= k_max` and
/// every `y` in the grid. `a` is the algorithm under test and `b` its
/// reference process.
pub fn check_dominance(
    a: &Population,
    b: &Population,
    k_max: usize,
    y_grid: &[f64],
    confidence_complement: f64,
) -> Result<DominanceReport> {
    check_range(
        "confidence_complement",
        confidence_complement,
        confidence_complement > 0.0 && confidence_complement < 1.0,
        "in (0, 1)",
    )?;
    let same = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
    if a.problem.with_sigma(0.0) != b.problem.with_sigma(0.0)
        || !same(a.gamma, b.gamma)
        || !same(a.alpha, b.alpha)
        || !same(a.q, b.q)
        || !same(a.epsilon, b.epsilon)
    {
        return Err(Error::PopulationMismatch(format!(
            "{} and {} differ in problem or target parameters",
            a.label, b.label
        )));
    }
    if k_max > a.k_max || k_max > b.k_max {
        return Err(Error::PopulationMismatch(format!(
            "k_max {k_max} exceeds the recorded horizon"
        )));
    }
    let floor = a.valid_above.max(b.valid_above);
    if let Some(&y) = y_grid.iter().find(|y| **y < floor) {
        return Err(Error::ValueOutOfRange {
            value: y,
            lower: floor,
            upper: a.problem.y_max,
        });
    }
    let dkw_a = dkw_margin(a.runs, confidence_complement);
    let dkw_b = dkw_margin(b.runs, confidence_complement);
    let tolerance = dkw_a + dkw_b;
    let ks: Vec<usize> = (0..=k_max).collect();
    let table = |p: &Population| -> Vec<Vec<f64>> {
        ks.iter()
            .map(|&k| y_grid.iter().map(|&y| p.cdf(k, y)).collect())
            .collect()
    };
    let cdf_a = table(a);
    let cdf_b = table(b);
    let mut violations = Vec::new();
    let mut max_deficit = f64::NEG_INFINITY;
    for &k in &ks {
        for (j, &y) in y_grid.iter().enumerate() {
            let deficit = cdf_b[k][j] - cdf_a[k][j];
            max_deficit = max_deficit.max(deficit);
            if deficit > tolerance {
                violations.push(Violation { k, y, deficit });
            }
        }
    }
    Ok(DominanceReport {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        runs_a: a.runs,
        runs_b: b.runs,
        ks,
        y_grid: y_grid.to_vec(),
        cdf_a,
        cdf_b,
        confidence_complement,
        dkw_margin_a: dkw_a,
        dkw_margin_b: dkw_b,
        tolerance,
        max_deficit,
        pass: violations.is_empty(),
        violations,
    })
}

// ---------------------------------------------------------------------------
// Expectation bounds

/// Which comparison decides a bound check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundRule {
    /// `mean + 3 stderr <= bound`.
    #[default]
    MeanPlusThreeStderr,
    /// `mean < bound`.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountCheck {
    pub quantity: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `bound - (mean + 3 stderr)`.
    pub slack: f64,
    pub mean_plus_3se_below: bool,
    pub mean_below: bool,
    pub rule: BoundRule,
    pub pass: bool,
}

impl CountCheck {
    fn new(quantity: &'static str, values: &[f64], bound: f64, rule: BoundRule) -> Self {
        let (mean, stderr) = mean_and_stderr(values);
        let upper = mean + 3.0 * stderr;
        let mean_plus_3se_below = upper <= bound;
        let mean_below = mean < bound;
        Self {
            quantity,
            mean,
            stderr,
            bound,
            slack: bound - upper,
            mean_plus_3se_below,
            mean_below,
            rule,
            pass: match rule {
                BoundRule::MeanPlusThreeStderr => mean_plus_3se_below,
                BoundRule::Mean => mean_below,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub runs: usize,
    pub target: f64,
    pub iterations: CountCheck,
    pub replications: Option<CountCheck>,
    pub pass: bool,
}

/// Compares first-hitting counts against an iteration bound and, when
/// given, an evaluation bound.
pub fn check_expectation_bound(
    traces: &[Trace],
    target: f64,
    iteration_bound: f64,
    evaluation_bound: Option<f64>,
    rule: BoundRule,
) -> Result<BoundCheckReport> {
    if traces.is_empty() {
        return Err(Error::PopulationMismatch("empty population".into()));
    }
    let hits: Vec<_> = traces
        .iter()
        .filter_map(|t| t.first_hitting(target))
        .collect();
    if hits.len() < traces.len() {
        return Err(Error::UnreachedTarget {
            unreached: traces.len() - hits.len(),
            total: traces.len(),
            target,
        });
    }
    let iterations: Vec<f64> = hits.iter().map(|h| h.iterations as f64).collect();
    let it = CountCheck::new("N_I", &iterations, iteration_bound, rule);
    let ev = evaluation_bound.map(|b| {
        let reps: Vec<f64> = hits.iter().map(|h| h.replications as f64).collect();
        CountCheck::new("N_R", &reps, b, rule)
    });
    let pass = it.pass && ev.as_ref().is_none_or(|c| c.pass);
    Ok(BoundCheckReport {
        runs: traces.len(),
        target,
        iterations: it,
        replications: ev,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Linear-root inequality

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub a_points: usize,
    pub n_max: usize,
    pub points: usize,
    pub violations: usize,
    pub inner_violations: usize,
    /// Smallest `bound - a^(1/n)/(1-a^(1/n))` on the grid.
    pub worst_slack: f64,
    /// Smallest `n (1 - a^(1/n)) - (1 - a)` on the grid.
    pub worst_inner_slack: f64,
    pub pass: bool,
}

/// Evaluates the linear bound and `n (1 - a^(1/n)) >= 1 - a` for
/// `a = i / (a_points + 1)` and `n = 1..=n_max`.
pub fn check_lemma2(a_points: usize, n_max: usize) -> Result<Lemma2Report> {
    let mut worst_slack = f64::INFINITY;
    let mut worst_inner = f64::INFINITY;
    let (mut violations, mut inner_violations) = (0, 0);
    for i in 1..=a_points {
        let a = i as f64 / (a_points + 1) as f64;
        for n in 1..=n_max {
            let nf = n as f64;
            let slack = lemma2_linear_bound(a, nf)? - root_ratio(a, nf);
            let inner = nf * (1.0 - a.powf(1.0 / nf)) - (1.0 - a);
            worst_slack = worst_slack.min(slack);
            worst_inner = worst_inner.min(inner);
            violations += usize::from(!(slack >= 0.0));
            inner_violations += usize::from(!(inner >= 0.0));
        }
    }
    Ok(Lemma2Report {
        a_points,
        n_max,
        points: a_points * n_max,
        violations,
        inner_violations,
        worst_slack,
        worst_inner_slack: worst_inner,
        pass: violations == 0 && inner_violations == 0,
    })
}

// ---------------------------------------------------------------------------
// Confidence-interval coverage

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub alpha: f64,
    pub sigma: f64,
    pub replications: u64,
    pub trials: usize,
    pub mode: EstimatorMode,
    pub frequency: f64,
    /// `1 - alpha - 4 sqrt(alpha (1 - alpha) / M)`.
    pub threshold: f64,
    pub pass: bool,
}

/// Frequency of `f <= y_high <= f + 2 sigma z / sqrt(R)` over `trials`
/// estimates at a fixed point of `problem`.
pub fn check_ci_coverage(
    problem: &BenchmarkProblem,
    alpha: f64,
    replications: u64,
    trials: usize,
    mode: EstimatorMode,
    seed: u64,
) -> Result<CoverageReport> {
    check_range("trials", trials as f64, trials > 0, "> 0")?;
    let est = EstimateConfig::new(alpha, problem.sigma())?;
    let y = 0.5 * (problem.y_star + problem.y_max);
    let hits = par_map(trials, |i| -> Result<bool> {
        let mut rng = RandomStream::new(seed, i as u64).lane(1);
        Ok(ci_event_holds(
            y,
            &estimate_at(problem, y, replications, &est, mode, &mut rng)?,
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let frequency = hits.iter().filter(|h| **h).count() as f64 / trials as f64;
    let threshold = 1.0 - alpha - 4.0 * (alpha * (1.0 - alpha) / trials as f64).sqrt();
    Ok(CoverageReport {
        alpha,
        sigma: problem.sigma(),
        replications,
        trials,
        mode,
        frequency,
        threshold,
        pass: frequency >= threshold,
    })
}

// ---------------------------------------------------------------------------
// Assumption audits

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditStatus {
    /// Holds by construction or by exact evaluation.
    Provable,
    /// No violation beyond the stated statistical margin.
    AuditedPass,
    Fail,
    /// The assumption does not concern the audited variant.
    NotApplicable,
}

impl AuditStatus {
    pub fn is_fail(self) -> bool {
        self == AuditStatus::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionAudit {
    pub id: &'static str,
    pub method: String,
    pub grid: Vec<f64>,
    pub estimates: Vec<f64>,
    /// Requirement the estimates are compared to, one per grid point.
    pub requirements: Vec<f64>,
    pub margin: f64,
    pub status: AuditStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionAuditReport {
    pub variant: Variant,
    pub samples: usize,
    pub audits: Vec<AssumptionAudit>,
    pub pass: bool,
}

/// Audits the sampling assumptions of `runner`'s variant with `samples`
/// draws per grid point. HAS-type variants get 1(i) and 1(ii); QAS-E gets
/// 2(i), 2(ii) and 2(iii).
pub fn audit_assumptions(
    runner: &Runner,
    samples: usize,
    seed: u64,
) -> Result<AssumptionAuditReport> {
    check_range("samples", samples as f64, samples >= 2, ">= 2")?;
    let variant = runner.config().variant;
    let audits = if variant == Variant::Qase {
        vec![
            audit_2i(runner, samples, seed)?,
            audit_2ii(runner, samples, seed.wrapping_add(1))?,
            audit_2iii(runner, samples, seed.wrapping_add(2))?,
        ]
    } else {
        vec![audit_1i(), audit_1ii(runner)]
    };
    let pass = !audits.iter().any(|a| a.status.is_fail());
    Ok(AssumptionAuditReport {
        variant,
        samples,
        audits,
        pass,
    })
}

fn audit_1i() -> AssumptionAudit {
    AssumptionAudit {
        id: "1i",
        method: "initial distribution is uniform on S; dominance holds with equality".into(),
        grid: Vec::new(),
        estimates: Vec::new(),
        requirements: Vec::new(),
        margin: 0.0,
        status: AuditStatus::Provable,
    }
}

fn audit_1ii(runner: &Runner) -> AssumptionAudit {
    let p = runner.problem();
    let b = runner.config().effective_bettering();
    let grid = linear_grid(p.y_star, p.y_max, 257);
    let estimates: Vec<f64> = grid
        .iter()
        .map(|&y| b.probability(y, p.y_star, p.y_max))
        .collect();
    let gamma = runner.config().gamma;
    let ok = estimates.iter().all(|v| *v > 0.0);
    AssumptionAudit {
        id: "1ii",
        method: format!("b(y) evaluated exactly on the grid; gamma = {gamma}"),
        requirements: vec![0.0; grid.len()],
        grid,
        estimates,
        margin: 0.0,
        status: if ok {
            AuditStatus::Provable
        } else {
            AuditStatus::Fail
        },
    }
}

const AUDIT_CONFIDENCE_COMPLEMENT: f64 = 0.01;
const AUDIT_DELTAS: [f64; 5] = [1.0, 0.5, 0.1, 0.03, 0.01];

/// Mixture samples never fall below the uniform CDF. Checked at
/// `y = y_{delta'}` for every pair of quantile levels.
fn audit_2i(runner: &Runner, samples: usize, seed: u64) -> Result<AssumptionAudit> {
    let p = runner.problem();
    let g = runner.geometry();
    let m = runner.config().effective_mix_weight();
    let sampler = runner.config().sampler;
    let margin = dkw_margin(samples, AUDIT_CONFIDENCE_COMPLEMENT);
    let y_levels: Vec<f64> = [0.9, 0.5, 0.2, 0.05, 0.01, 0.002]
        .iter()
        .map(|d| g.value_of_quantile(*d))
        .collect::<Result<_>>()?;
    let (mut grid, mut estimates, mut requirements) = (Vec::new(), Vec::new(), Vec::new());
    let mut fail = false;
    for (di, &delta) in AUDIT_DELTAS.iter().enumerate() {
        let values = mixture_values(p, g, delta, m, samples, seed, di as u64, &sampler)?;
        for &y in &y_levels {
            let emp = ecdf(&values, y);
            let uniform = g.quantile(y);
            fail |= emp < uniform - margin;
            grid.push(delta);
            grid.push(y);
            estimates.push(emp);
            requirements.push(uniform);
        }
    }
    Ok(AssumptionAudit {
        id: "2i",
        method: format!(
            "empirical mixture CDF vs uniform CDF; grid holds (delta, y) pairs; DKW at {}",
            1.0 - AUDIT_CONFIDENCE_COMPLEMENT
        ),
        grid,
        estimates,
        requirements,
        margin,
        status: if fail {
            AuditStatus::Fail
        } else {
            AuditStatus::AuditedPass
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn mixture_values(
    p: &BenchmarkProblem,
    g: &LevelSetGeometry,
    delta: f64,
    m: f64,
    samples: usize,
    seed: u64,
    group: u64,
    sampler: &SamplerConfig,
) -> Result<Vec<f64>> {
    let mut values = par_map(samples, |i| -> Result<f64> {
        let mut rng = RandomStream::new(seed, i as u64).lane(16 + group);
        Ok(sample_quantile_mixture(p, g, delta, m, &mut rng, sampler)?.value)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// With `delta` set from `ybar^high`, a sample improves on `ybar^high` with
/// probability at least gamma.
fn audit_2ii(runner: &Runner, samples: usize, seed: u64) -> Result<AssumptionAudit> {
    let p = runner.problem();
    let g = runner.geometry();
    let m = runner.config().effective_mix_weight();
    let gamma = runner.config().gamma;
    let sampler = runner.config().sampler;
    let margin = 3.0 * (0.25 / samples as f64).sqrt();
    let grid = linear_grid(runner.target(), p.y_max, 10);
    let mut estimates = Vec::new();
    let mut fail = false;
    for (gi, &y_high) in grid.iter().enumerate() {
        let delta = g.quantile(y_high).clamp(runner.delta_min(), 1.0);
        let values = mixture_values(p, g, delta, m, samples, seed, gi as u64, &sampler)?;
        let freq = ecdf(&values, y_high);
        fail |= freq < gamma - margin;
        estimates.push(freq);
    }
    Ok(AssumptionAudit {
        id: "2ii",
        method: "empirical P(Y <= ybar^high) vs gamma; margin 3 binomial standard errors at variance 1/4".into(),
        requirements: vec![gamma; grid.len()],
        grid,
        estimates,
        margin,
        status: if fail { AuditStatus::Fail } else { AuditStatus::AuditedPass },
    })
}

/// One-step conditional CDFs from paired conditioning values `ybar < ybar'`
/// are ordered.
fn audit_2iii(runner: &Runner, samples: usize, seed: u64) -> Result<AssumptionAudit> {
    let p = runner.problem();
    let margin = 2.0 * dkw_margin(samples, AUDIT_CONFIDENCE_COMPLEMENT);
    let levels = linear_grid(runner.target(), p.y_max, 11);
    let pairs: Vec<(f64, f64)> = levels.windows(2).map(|w| (w[0], w[1])).collect();
    let next = |ybar: f64| -> Result<Vec<f64>> {
        let mut v = par_map(samples, |i| {
            runner.step_from(ybar, 0, seed, i as u64).map(|s| s.0)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        v.sort_by(f64::total_cmp);
        Ok(v)
    };
    let y_grid = linear_grid(p.y_star + 0.5 * (runner.target() - p.y_star), p.y_max, 20);
    let (mut grid, mut estimates, mut requirements) = (Vec::new(), Vec::new(), Vec::new());
    let mut fail = false;
    let mut worst = f64::NEG_INFINITY;
    for (lo, hi) in pairs {
        let a = next(lo)?;
        let b = next(hi)?;
        for &y in &y_grid {
            let (fa, fb) = (ecdf(&a, y), ecdf(&b, y));
            worst = worst.max(fb - fa);
            fail |= fa < fb - margin;
            grid.extend([lo, hi, y]);
            estimates.push(fa);
            requirements.push(fb);
        }
    }
    Ok(AssumptionAudit {
        id: "2iii",
        method: format!(
            "one-step CDFs from paired states (ybar, ybar', y) triples in grid; largest reversal {worst:.4}; 2 x DKW"
        ),
        grid,
        estimates,
        requirements,
        margin,
        status: if fail { AuditStatus::Fail } else { AuditStatus::AuditedPass },
    })
}
