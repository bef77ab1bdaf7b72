use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::estimation::{required_replications, EstimateConfig, EstimatorMode};
use crate::geometry::LevelSetGeometry;
use crate::problem::BenchmarkProblem;
use crate::samplers::SamplerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "HAS")]
    Has,
    #[serde(rename = "HAS1")]
    Has1,
    #[serde(rename = "HAS2")]
    Has2,
    #[serde(rename = "HASE")]
    Hase,
    #[serde(rename = "QASE")]
    Qase,
}

impl Variant {
    pub fn is_reference(self) -> bool {
        matches!(self, Variant::Has1 | Variant::Has2)
    }

    /// Variants that observe the objective only through noisy estimates.
    pub fn estimates(self) -> bool {
        matches!(self, Variant::Hase | Variant::Qase)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Has => "HAS",
            Variant::Has1 => "HAS1",
            Variant::Has2 => "HAS2",
            Variant::Hase => "HASE",
            Variant::Qase => "QASE",
        }
    }
}

/// Bettering probability `b(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bettering {
    Constant {
        p: f64,
    },
    /// Linear in `y` between `at_optimum` (at `y_star`) and `at_max` (at `y_max`).
    Linear {
        at_optimum: f64,
        at_max: f64,
    },
}

impl Bettering {
    pub fn probability(&self, y: f64, y_star: f64, y_max: f64) -> f64 {
        match *self {
            Bettering::Constant { p } => p,
            Bettering::Linear { at_optimum, at_max } => {
                let t = ((y - y_star) / (y_max - y_star)).clamp(0.0, 1.0);
                at_optimum + (at_max - at_optimum) * t
            }
        }
    }

    /// Infimum over the objective range.
    pub fn minimum(&self) -> f64 {
        match *self {
            Bettering::Constant { p } => p,
            Bettering::Linear { at_optimum, at_max } => at_optimum.min(at_max),
        }
    }

    fn maximum(&self) -> f64 {
        match *self {
            Bettering::Constant { p } => p,
            Bettering::Linear { at_optimum, at_max } => at_optimum.max(at_max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ReplicationSchedule {
    /// Constant `R` from the volume-ratio replication formula.
    Theorem,
    Constant {
        r: u64,
    },
    /// `R_k = values[min(k, len - 1)]`.
    Sequence {
        values: Vec<u64>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop once the best true value reaches `y_star + epsilon`.
    #[default]
    TrueTarget,
    /// Stop once the best upper confidence value reaches `y_star + epsilon`.
    EstimatedTarget,
    /// Always run `max_iterations`.
    Never,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub gamma: f64,
    pub alpha: f64,
    pub q: f64,
    pub epsilon: f64,
    pub replications: ReplicationSchedule,
    /// Defaults to the constant `gamma` (HAS, HASE). Ignored by the
    /// reference processes, which use `gamma * (1 - alpha) * q`.
    pub bettering: Option<Bettering>,
    /// QASE mixture weight; defaults to `gamma`.
    pub mix_weight: Option<f64>,
    pub max_iterations: usize,
    pub stop: StopRule,
    pub estimator: EstimatorMode,
    pub sampler: SamplerConfig,
}

impl AlgorithmConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            gamma: 1.0,
            alpha: 0.05,
            q: 0.5,
            epsilon: 0.1,
            replications: ReplicationSchedule::Theorem,
            bettering: None,
            mix_weight: None,
            max_iterations: 100_000,
            stop: StopRule::TrueTarget,
            estimator: EstimatorMode::Aggregate,
            sampler: SamplerConfig::default(),
        }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn replications(mut self, schedule: ReplicationSchedule) -> Self {
        self.replications = schedule;
        self
    }

    pub fn bettering(mut self, b: Bettering) -> Self {
        self.bettering = Some(b);
        self
    }

    pub fn mix_weight(mut self, m: f64) -> Self {
        self.mix_weight = Some(m);
        self
    }

    pub fn max_iterations(mut self, k: usize) -> Self {
        self.max_iterations = k;
        self
    }

    pub fn stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn estimator(mut self, mode: EstimatorMode) -> Self {
        self.estimator = mode;
        self
    }

    pub fn sampler(mut self, sampler: SamplerConfig) -> Self {
        self.sampler = sampler;
        self
    }

    /// The bettering function the engine actually uses.
    pub fn effective_bettering(&self) -> Bettering {
        if self.variant.is_reference() {
            Bettering::Constant {
                p: self.gamma * (1.0 - self.alpha) * self.q,
            }
        } else {
            self.bettering
                .unwrap_or(Bettering::Constant { p: self.gamma })
        }
    }

    pub fn effective_mix_weight(&self) -> f64 {
        self.mix_weight.unwrap_or(self.gamma)
    }

    pub fn target(&self, problem: &BenchmarkProblem) -> f64 {
        problem.y_star + self.epsilon
    }

    pub fn validate(&self, problem: &BenchmarkProblem) -> Result<()> {
        check_range(
            "gamma",
            self.gamma,
            self.gamma > 0.0 && self.gamma <= 1.0,
            "in (0, 1]",
        )?;
        let span = problem.y_max - problem.y_star;
        check_range(
            "epsilon",
            self.epsilon,
            self.epsilon > 0.0 && self.epsilon < span,
            "in (0, y_max - y_star)",
        )?;
        check_range(
            "max_iterations",
            self.max_iterations as f64,
            self.max_iterations >= 1,
            ">= 1",
        )?;
        if self.variant.is_reference() {
            check_range(
                "alpha",
                self.alpha,
                (0.0..1.0).contains(&self.alpha),
                "in [0, 1)",
            )?;
            check_range("q", self.q, self.q > 0.0 && self.q <= 1.0, "in (0, 1]")?;
        } else {
            check_range(
                "alpha",
                self.alpha,
                self.alpha > 0.0 && self.alpha < 1.0,
                "in (0, 1)",
            )?;
            check_range("q", self.q, self.q > 0.0 && self.q < 1.0, "in (0, 1)")?;
        }
        let b = self.effective_bettering();
        if !(b.minimum() > 0.0) {
            return Err(Error::NonPositiveBettering(b.minimum()));
        }
        check_range("bettering", b.maximum(), b.maximum() <= 1.0, "<= 1")?;
        if !self.variant.is_reference() && self.bettering.is_some() && b.minimum() < self.gamma {
            return Err(Error::ParameterOutOfRange {
                name: "bettering",
                value: b.minimum(),
                expected: ">= gamma everywhere",
            });
        }
        if self.variant == Variant::Qase {
            let m = self.effective_mix_weight();
            check_range("mix_weight", m, m > 0.0 && m <= 1.0, "in (0, 1]")?;
        }
        match &self.replications {
            ReplicationSchedule::Theorem => {}
            ReplicationSchedule::Constant { r } => {
                if *r == 0 {
                    return Err(Error::NonPositiveReplicationCount);
                }
            }
            ReplicationSchedule::Sequence { values } => {
                if values.is_empty() || values.contains(&0) {
                    return Err(Error::NonPositiveReplicationCount);
                }
            }
        }
        Ok(())
    }

    pub fn estimate_config(&self, problem: &BenchmarkProblem) -> Result<EstimateConfig> {
        EstimateConfig::new(self.alpha, problem.sigma())
    }
}

/// The per-iteration replication counts `R_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedSchedule(Vec<u64>);

impl ResolvedSchedule {
    pub fn at(&self, k: usize) -> u64 {
        self.0[k.min(self.0.len() - 1)]
    }

    /// The constant `R` when the schedule is constant.
    pub fn constant(&self) -> Option<u64> {
        (self.0.len() == 1).then(|| self.0[0])
    }
}

/// The constant replication count from the volume-ratio formula, with
/// `r_eps` and `K_q` taken from the level-set geometry.
pub fn theorem_replications(
    geom: &LevelSetGeometry,
    q: f64,
    alpha: f64,
    epsilon: f64,
) -> Result<u64> {
    let problem = geom.problem();
    let est = EstimateConfig::new(alpha, problem.sigma())?;
    let r_eps = geom.inscribed_radius(problem.y_star + epsilon)?;
    let kq = geom.compute_kq(q, epsilon)?;
    required_replications(q, problem.dimension(), &est, r_eps, kq.k_q)
}

pub fn resolve_schedule(
    config: &AlgorithmConfig,
    geom: &LevelSetGeometry,
) -> Result<ResolvedSchedule> {
    Ok(ResolvedSchedule(match &config.replications {
        ReplicationSchedule::Theorem => {
            vec![theorem_replications(
                geom,
                config.q,
                config.alpha,
                config.epsilon,
            )?]
        }
        ReplicationSchedule::Constant { r } => vec![*r],
        ReplicationSchedule::Sequence { values } => values.clone(),
    }))
}

impl ResolvedSchedule {
    /// One exact evaluation per fresh point.
    pub fn noiseless() -> Self {
        ResolvedSchedule(vec![1])
    }
}
