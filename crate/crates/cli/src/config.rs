//! Experiment configuration files.

use std::path::{Path, PathBuf};

use arsearch::algorithms::{AlgorithmConfig, Bettering, ReplicationSchedule, StopRule, Variant};
use arsearch::estimation::EstimatorMode;
use arsearch::geometry::LevelSetGeometry;
use arsearch::problem::BenchmarkProblem;
use arsearch::samplers::{LevelStrategy, SamplerConfig, DEFAULT_MAX_ATTEMPTS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Seed used for Monte Carlo geometry of problems without closed forms.
pub const GEOMETRY_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemBlock,
    pub algorithm: AlgorithmBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemName {
    /// `||x||` on a centred ball.
    Sphere,
    /// Weighted quadratic on a box.
    BoxQuadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub name: ProblemName,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmBlock {
    pub variant: Variant,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::q")]
    pub q: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    /// QASE mixture weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default = "defaults::replications")]
    pub replications: ReplicationSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bettering: Option<Bettering>,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub estimator: EstimatorMode,
    #[serde(default)]
    pub level_sampling: LevelStrategy,
}

mod defaults {
    use arsearch::algorithms::ReplicationSchedule;

    pub fn gamma() -> f64 {
        1.0
    }
    pub fn alpha() -> f64 {
        0.05
    }
    pub fn q() -> f64 {
        0.5
    }
    pub fn epsilon() -> f64 {
        0.1
    }
    pub fn replications() -> ReplicationSchedule {
        ReplicationSchedule::Theorem
    }
    pub fn max_iterations() -> usize {
        100_000
    }
    pub fn runs() -> usize {
        1
    }
    pub fn k_max() -> usize {
        50
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default = "defaults::runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::k_max")]
    pub k_max: usize,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            runs: defaults::runs(),
            seed: 0,
            k_max: defaults::k_max(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// A configuration that passed every range check, with the objects it
/// describes.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub problem: BenchmarkProblem,
    pub algorithm: AlgorithmConfig,
}

impl Resolved {
    pub fn geometry(&self) -> Result<LevelSetGeometry, CliError> {
        LevelSetGeometry::for_problem(&self.problem, GEOMETRY_SEED)
            .map_err(|e| CliError::invalid("problem", e))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Canonical serialization; the hash and the header echo use it.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn problem(&self) -> Result<BenchmarkProblem, CliError> {
        let p = &self.problem;
        check("problem.n", p.n as f64, p.n >= 1, ">= 1")?;
        check(
            "problem.sigma",
            p.sigma,
            p.sigma >= 0.0 && p.sigma.is_finite(),
            ">= 0",
        )?;
        let field = |v: &Option<Vec<f64>>, key: &str| -> Result<Option<Vec<f64>>, CliError> {
            match v {
                Some(v) if v.len() != p.n => Err(CliError::Config {
                    path: format!("problem.{key}"),
                    message: format!("expected {} entries, got {}", p.n, v.len()),
                }),
                other => Ok(other.clone()),
            }
        };
        match p.name {
            ProblemName::Sphere => {
                let r = p.radius.unwrap_or(1.0);
                check("problem.radius", r, r > 0.0 && r.is_finite(), "> 0")?;
                for (key, v) in [
                    ("lower", &p.lower),
                    ("upper", &p.upper),
                    ("center", &p.center),
                    ("weights", &p.weights),
                ] {
                    if v.is_some() {
                        return Err(CliError::Config {
                            path: format!("problem.{key}"),
                            message: "not used by the sphere problem".into(),
                        });
                    }
                }
                BenchmarkProblem::sphere(p.n, r, p.sigma)
                    .map_err(|e| CliError::invalid("problem", e))
            }
            ProblemName::BoxQuadratic => {
                if p.radius.is_some() {
                    return Err(CliError::Config {
                        path: "problem.radius".into(),
                        message: "not used by the box-quadratic problem".into(),
                    });
                }
                let fields = [
                    field(&p.lower, "lower")?,
                    field(&p.upper, "upper")?,
                    field(&p.center, "center")?,
                    field(&p.weights, "weights")?,
                ];
                if fields.iter().all(Option::is_none) {
                    return BenchmarkProblem::default_box(p.n, p.sigma)
                        .map_err(|e| CliError::invalid("problem", e));
                }
                let [lower, upper, center, weights] = fields;
                let need = |v: Option<Vec<f64>>, key: &str| {
                    v.ok_or_else(|| CliError::Config {
                        path: format!("problem.{key}"),
                        message: "required when any box field is given".into(),
                    })
                };
                BenchmarkProblem::box_quadratic(
                    need(lower, "lower")?,
                    need(upper, "upper")?,
                    need(center, "center")?,
                    need(weights, "weights")?,
                    p.sigma,
                )
                .map_err(|e| CliError::invalid("problem", e))
            }
        }
    }

    pub fn algorithm(&self) -> AlgorithmConfig {
        let a = &self.algorithm;
        let mut cfg = AlgorithmConfig::new(a.variant)
            .gamma(a.gamma)
            .alpha(a.alpha)
            .q(a.q)
            .epsilon(a.epsilon)
            .replications(a.replications.clone())
            .max_iterations(a.max_iterations)
            .stop(a.stop)
            .estimator(a.estimator)
            .sampler(SamplerConfig {
                strategy: a.level_sampling,
                max_attempts: DEFAULT_MAX_ATTEMPTS,
            });
        if let Some(b) = a.bettering {
            cfg = cfg.bettering(b);
        }
        if let Some(m) = a.m {
            cfg = cfg.mix_weight(m);
        }
        cfg
    }

    /// Checks every numeric range and builds the problem and algorithm.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        check("run.runs", self.run.runs as f64, self.run.runs >= 1, ">= 1")?;
        if self.output.formats.is_empty() {
            return Err(CliError::Config {
                path: "output.formats".into(),
                message: "at least one format is required".into(),
            });
        }
        let problem = self.problem()?;
        let algorithm = self.algorithm();
        algorithm
            .validate(&problem)
            .map_err(|e| CliError::invalid("algorithm", e))?;
        Ok(Resolved {
            config: self.clone(),
            problem,
            algorithm,
        })
    }
}

fn check(path: &str, value: f64, ok: bool, expected: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config {
            path: path.into(),
            message: format!("{value} is out of range, expected {expected}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"problem": {"name": "sphere", "n": 1}, "algorithm": {"variant": "HAS"}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.problem.radius, None);
        assert_eq!(c.algorithm.gamma, 1.0);
        assert_eq!(c.run.runs, 1);
        assert_eq!(c.output.formats, [OutputFormat::Csv, OutputFormat::Json]);
        let r = c.resolve().unwrap();
        assert_eq!(r.problem.dimension(), 1);
    }

    #[test]
    fn round_trip_and_hash() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        let back = ExperimentConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sha256(), c.sha256());
        assert_eq!(c.sha256().len(), 64);
        let mut d = c.clone();
        d.run.seed = 1;
        assert_ne!(d.sha256(), c.sha256());
    }

    #[test]
    fn errors_name_the_key() {
        let bad = MINIMAL.replace("\"HAS\"", "\"HASX\"");
        let e = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("algorithm.variant"), "{e}");

        let bad = MINIMAL.replace("\"n\": 1", "\"n\": 1, \"sigmaa\": 1");
        let e = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("problem"), "{e}");
        assert!(e.to_string().contains("sigmaa"), "{e}");

        let bad = MINIMAL.replace("\"HAS\"", "\"HAS\", \"gamma\": 1.5");
        let e = ExperimentConfig::from_json(&bad)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(e.to_string().contains("algorithm.gamma"), "{e}");

        let bad = MINIMAL.replace("\"n\": 1", "\"n\": 1, \"sigma\": -1");
        let e = ExperimentConfig::from_json(&bad)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(e.to_string().contains("problem.sigma"), "{e}");

        let bad = r#"{"problem": {"name": "box-quadratic", "n": 2, "lower": [0, 0, 0]}, "algorithm": {"variant": "HAS"}}"#;
        let e = ExperimentConfig::from_json(bad)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(e.to_string().contains("problem.lower"), "{e}");
    }

    #[test]
    fn box_problem_defaults() {
        let text = r#"{"problem": {"name": "box-quadratic", "n": 2, "sigma": 0.1}, "algorithm": {"variant": "QASE", "m": 0.5, "gamma": 0.5}}"#;
        let r = ExperimentConfig::from_json(text)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(r.problem.name, "box-quadratic");
        assert_eq!(r.algorithm.effective_mix_weight(), 0.5);
    }
}
