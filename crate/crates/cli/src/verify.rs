//! The `verify` command: the verification checks at documented default
//! scales.

use std::str::FromStr;

use arsearch::algorithms::{AlgorithmConfig, Runner, Trace, Variant};
use arsearch::bounds::{bound_report, BoundParams};
use arsearch::estimation::EstimatorMode;
use arsearch::geometry::LevelSetGeometry;
use arsearch::population::run_population;
use arsearch::problem::BenchmarkProblem;
use arsearch::verification::{
    audit_assumptions, check_ci_coverage, check_dominance, check_expectation_bound, check_lemma2,
    check_theorem1, linear_grid, BoundRule, Population,
};
use serde::Serialize;

use crate::config::Resolved;
use crate::CliError;

/// Runs per population at scale 1.
pub const BASE_RUNS: usize = 10_000;
/// Samples per audit grid point and coverage trials at scale 1.
pub const BASE_SAMPLES: usize = 100_000;
pub const K_MAX: usize = 50;
pub const GRID_POINTS: usize = 50;
pub const CONFIDENCE_COMPLEMENT: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selector {
    Theorem1,
    DominanceHase,
    DominanceQase,
    BoundsHase,
    BoundsQase,
    Lemma2,
    Assumptions,
    Coverage,
    All,
}

impl Selector {
    pub const NAMES: [&'static str; 9] = [
        "theorem1",
        "dominance-hase",
        "dominance-qase",
        "bounds-hase",
        "bounds-qase",
        "lemma2",
        "assumptions",
        "coverage",
        "all",
    ];

    fn expand(self) -> Vec<Selector> {
        use Selector::*;
        match self {
            All => vec![
                Theorem1,
                DominanceHase,
                DominanceQase,
                BoundsHase,
                BoundsQase,
                Lemma2,
                Assumptions,
                Coverage,
            ],
            s => vec![s],
        }
    }
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        use Selector::*;
        let all = [
            Theorem1,
            DominanceHase,
            DominanceQase,
            BoundsHase,
            BoundsQase,
            Lemma2,
            Assumptions,
            Coverage,
            All,
        ];
        Self::NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| all[i])
            .ok_or_else(|| {
                format!(
                    "unknown selector `{s}`; expected one of {}",
                    Self::NAMES.join(", ")
                )
            })
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub scale: f64,
    /// Divides the volume-ratio replication count (negative control).
    pub replication_divisor: f64,
    /// Problem and parameters to verify instead of the defaults.
    pub config: Option<Resolved>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: 1.0,
            replication_divisor: 1.0,
            config: None,
        }
    }
}

impl VerifyOptions {
    fn scaled(&self, base: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(100)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    pub summary: String,
    pub report: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyBundle {
    pub selector: Selector,
    pub seed: u64,
    pub scale: f64,
    pub replication_divisor: f64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

/// Parameters shared by the population checks.
struct Setting {
    problem: BenchmarkProblem,
    geom: LevelSetGeometry,
    gamma: f64,
    alpha: f64,
    q: f64,
    epsilon: f64,
    mix_weight: Option<f64>,
}

impl Setting {
    fn new(opts: &VerifyOptions, default_gamma: f64) -> Result<Self, CliError> {
        match &opts.config {
            Some(r) => Ok(Self {
                problem: r.problem.clone(),
                geom: r.geometry()?,
                gamma: r.algorithm.gamma,
                alpha: r.algorithm.alpha,
                q: r.algorithm.q,
                epsilon: r.algorithm.epsilon,
                mix_weight: r.algorithm.mix_weight,
            }),
            None => {
                let problem = BenchmarkProblem::sphere(2, 1.0, 0.05)?;
                Ok(Self {
                    geom: LevelSetGeometry::analytic(&problem)?,
                    problem,
                    gamma: default_gamma,
                    alpha: 0.05,
                    q: 0.5,
                    epsilon: 0.1,
                    mix_weight: None,
                })
            }
        }
    }

    fn config(&self, variant: Variant) -> AlgorithmConfig {
        let cfg = AlgorithmConfig::new(variant)
            .gamma(self.gamma)
            .alpha(self.alpha)
            .q(self.q)
            .epsilon(self.epsilon);
        match (variant, self.mix_weight) {
            (Variant::Qase, Some(m)) => cfg.mix_weight(m),
            _ => cfg,
        }
    }

    fn population(&self, variant: Variant, seed: u64, runs: usize) -> Result<Vec<Trace>, CliError> {
        let runner = Runner::new(&self.geom, &self.config(variant))
            .map_err(|e| CliError::invalid("algorithm", e))?;
        Ok(run_population(&runner, seed, runs)?)
    }

    fn target(&self) -> f64 {
        self.problem.y_star + self.epsilon
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn cmd_verify(selector: Selector, opts: &VerifyOptions) -> Result<VerifyBundle, CliError> {
    let mut checks = Vec::new();
    for s in selector.expand() {
        checks.extend(run_selector(s, opts)?);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyBundle {
        selector,
        seed: opts.seed,
        scale: opts.scale,
        replication_divisor: opts.replication_divisor,
        checks,
        pass,
    })
}

fn run_selector(s: Selector, opts: &VerifyOptions) -> Result<Vec<CheckResult>, CliError> {
    let runs = opts.scaled(BASE_RUNS);
    let seed = opts.seed;
    Ok(match s {
        Selector::Theorem1 => theorem1(opts, runs)?,
        Selector::DominanceHase => vec![dominance(opts, Variant::Hase, Variant::Has1, runs)?],
        Selector::DominanceQase => vec![dominance(opts, Variant::Qase, Variant::Has2, runs)?],
        Selector::BoundsHase => vec![bounds(opts, Variant::Hase, runs)?],
        Selector::BoundsQase => vec![bounds(opts, Variant::Qase, runs)?],
        Selector::Lemma2 => {
            let r = check_lemma2(99, 64)?;
            vec![CheckResult {
                check: "lemma2".into(),
                pass: r.pass,
                summary: format!(
                    "{} grid points, {} violations, {} inner violations",
                    r.points, r.violations, r.inner_violations
                ),
                report: to_value(&r),
            }]
        }
        Selector::Assumptions => {
            let samples = opts.scaled(BASE_SAMPLES);
            let mut out = Vec::new();
            for (variant, gamma) in [(Variant::Hase, 1.0), (Variant::Qase, 0.5)] {
                let setting = Setting::new(opts, gamma)?;
                let runner = Runner::new(&setting.geom, &setting.config(variant))
                    .map_err(|e| CliError::invalid("algorithm", e))?;
                let r = audit_assumptions(&runner, samples, seed.wrapping_add(40))?;
                let statuses: Vec<String> = r
                    .audits
                    .iter()
                    .map(|a| {
                        format!(
                            "{} {}",
                            a.id,
                            serde_json::to_value(a.status).expect("status")
                        )
                        .replace('"', "")
                    })
                    .collect();
                out.push(CheckResult {
                    check: format!("assumptions-{}", variant.name().to_lowercase()),
                    pass: r.pass,
                    summary: statuses.join(", "),
                    report: to_value(&r),
                });
            }
            out
        }
        Selector::Coverage => {
            let trials = opts.scaled(BASE_SAMPLES);
            let problem = match &opts.config {
                Some(r) if r.problem.sigma() > 0.0 => r.problem.clone(),
                _ => BenchmarkProblem::sphere(2, 1.0, 0.05)?,
            };
            let mut out = Vec::new();
            for mode in [EstimatorMode::Replicate, EstimatorMode::Aggregate] {
                let r = check_ci_coverage(&problem, 0.05, 20, trials, mode, seed.wrapping_add(50))?;
                out.push(CheckResult {
                    check: format!(
                        "coverage-{}",
                        serde_json::to_value(mode)
                            .expect("mode")
                            .as_str()
                            .unwrap_or("")
                    ),
                    pass: r.pass,
                    summary: format!(
                        "frequency {:.5} vs threshold {:.5}",
                        r.frequency, r.threshold
                    ),
                    report: to_value(&r),
                });
            }
            out
        }
        Selector::All => unreachable!("expanded"),
    })
}

fn theorem1(opts: &VerifyOptions, trials: usize) -> Result<Vec<CheckResult>, CliError> {
    let cases: Vec<(LevelSetGeometry, f64, f64, f64)> = match &opts.config {
        Some(r) => vec![(
            r.geometry()?,
            r.algorithm.q,
            r.algorithm.epsilon,
            r.algorithm.alpha,
        )],
        None => {
            let mut v = Vec::new();
            for n in 1..=3 {
                let g = LevelSetGeometry::analytic(&BenchmarkProblem::sphere(n, 1.0, 0.05)?)?;
                for q in [0.3, 0.5, 0.7] {
                    v.push((g.clone(), q, 0.1, 0.05));
                }
            }
            v
        }
    };
    let mut out = Vec::new();
    for (i, (g, q, eps, alpha)) in cases.into_iter().enumerate() {
        let r = check_theorem1(
            &g,
            q,
            eps,
            alpha,
            trials,
            opts.seed.wrapping_add(i as u64),
            opts.replication_divisor,
        )?;
        out.push(CheckResult {
            check: format!("theorem1 n={} q={q}", r.n),
            pass: r.pass,
            summary: format!(
                "{} of {} conditioned trials violate the ratio (R = {}, smallest ratio {:.4})",
                r.violations, r.conditioned, r.replications_used, r.min_ratio
            ),
            report: to_value(&r),
        });
    }
    Ok(out)
}

fn dominance(
    opts: &VerifyOptions,
    a: Variant,
    b: Variant,
    runs: usize,
) -> Result<CheckResult, CliError> {
    let setting = Setting::new(opts, if a == Variant::Qase { 0.5 } else { 1.0 })?;
    let seed = opts.seed.wrapping_add(10);
    let pa = Population::from_traces(a.name(), &setting.population(a, seed, runs)?, K_MAX)?;
    let pb = Population::from_traces(
        b.name(),
        &setting.population(b, seed.wrapping_add(1), runs)?,
        K_MAX,
    )?;
    let grid = linear_grid(setting.target(), setting.problem.y_max, GRID_POINTS);
    let r = check_dominance(&pa, &pb, K_MAX, &grid, CONFIDENCE_COMPLEMENT)?;
    Ok(CheckResult {
        check: format!("dominance-{}", a.name().to_lowercase()),
        pass: r.pass,
        summary: format!(
            "{} vs {}: max deficit {:.4}, tolerance {:.4}, {} violations",
            a.name(),
            b.name(),
            r.max_deficit,
            r.tolerance,
            r.violations.len()
        ),
        report: to_value(&r),
    })
}

fn bounds(opts: &VerifyOptions, variant: Variant, runs: usize) -> Result<CheckResult, CliError> {
    let setting = Setting::new(opts, if variant == Variant::Qase { 0.5 } else { 1.0 })?;
    let params = BoundParams {
        gamma: setting.gamma,
        alpha: setting.alpha,
        q: setting.q,
        epsilon: setting.epsilon,
    };
    let rep = bound_report(&setting.geom, params, false)?;
    let (it, ev) = match variant {
        Variant::Qase => (rep.qase_iteration_bound, rep.qase_evaluation_bound),
        _ => (rep.iteration_bound, rep.evaluation_bound),
    };
    let traces = setting.population(variant, opts.seed.wrapping_add(20), runs)?;
    let r = check_expectation_bound(
        &traces,
        setting.target(),
        it,
        Some(ev),
        BoundRule::MeanPlusThreeStderr,
    )?;
    let nr = r.replications.as_ref().expect("evaluation bound given");
    Ok(CheckResult {
        check: format!("bounds-{}", variant.name().to_lowercase()),
        pass: r.pass,
        summary: format!(
            "N_I {:.4} + 3se {:.4} vs {:.4}; N_R {:.1} + 3se {:.1} vs {:.1}",
            r.iterations.mean,
            3.0 * r.iterations.stderr,
            it,
            nr.mean,
            3.0 * nr.stderr,
            ev
        ),
        report: serde_json::json!({ "bounds": to_value(&rep), "check": to_value(&r) }),
    })
}
