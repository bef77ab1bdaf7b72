//! Point generation: uniform on the domain, uniform on an improving level
//! set, and the quantile-parameterized two-component mixture.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::LevelSetGeometry;
use crate::problem::{BenchmarkProblem, DomainSpec};
use crate::rng::RandomStream;

pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplingDistribution {
    UniformOnDomain,
    LevelRestricted { threshold: f64 },
    QuantileMixture { delta: f64, mix_weight: f64 },
}

impl SamplingDistribution {
    pub fn validate(&self, problem: &BenchmarkProblem) -> Result<()> {
        match *self {
            SamplingDistribution::UniformOnDomain => Ok(()),
            SamplingDistribution::LevelRestricted { threshold } => {
                check_threshold(problem, threshold)
            }
            SamplingDistribution::QuantileMixture { delta, mix_weight } => {
                check_range("delta", delta, delta > 0.0 && delta <= 1.0, "in (0, 1]")?;
                check_range(
                    "mix_weight",
                    mix_weight,
                    mix_weight > 0.0 && mix_weight <= 1.0,
                    "in (0, 1]",
                )
            }
        }
    }
}

/// How uniform draws on an improving level set are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelStrategy {
    /// Direct sampling when the level set is a known ball, rejection otherwise.
    #[default]
    Auto,
    /// Always rejection from uniform domain draws.
    Rejection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub strategy: LevelStrategy,
    pub max_attempts: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            strategy: LevelStrategy::Auto,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedSample {
    pub x: Vec<f64>,
    pub value: f64,
    /// Uniform domain draws consumed (1 for direct sampling).
    pub attempts: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSample {
    pub x: Vec<f64>,
    pub value: f64,
    /// Whether the draw came from the quantile level-set component.
    pub focused: bool,
}

fn check_threshold(problem: &BenchmarkProblem, threshold: f64) -> Result<()> {
    if threshold > problem.y_star && threshold <= problem.y_max {
        Ok(())
    } else {
        Err(Error::ValueOutOfRange {
            value: threshold,
            lower: problem.y_star,
            upper: problem.y_max,
        })
    }
}

/// Uniform point in a ball of radius `radius` around `center`.
pub fn sample_ball(center: &[f64], radius: f64, rng: &mut RandomStream) -> Vec<f64> {
    let n = center.len();
    let mut dir: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let mut norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    while norm == 0.0 {
        dir.iter_mut().for_each(|v| *v = rng.standard_normal());
        norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let r = radius * rng.uniform().powf(1.0 / n as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(c, d)| c + r * d / norm)
        .collect()
}

pub fn sample_uniform(domain: &DomainSpec, rng: &mut RandomStream) -> Vec<f64> {
    match domain {
        DomainSpec::Ball { center, radius } => sample_ball(center, *radius, rng),
        DomainSpec::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| l + (u - l) * rng.uniform())
            .collect(),
    }
}

/// Uniform on `{x in S : f(x) < threshold}` by rejection from uniform
/// domain draws.
pub fn sample_level_restricted(
    problem: &BenchmarkProblem,
    threshold: f64,
    rng: &mut RandomStream,
    max_attempts: u64,
) -> Result<RestrictedSample> {
    check_threshold(problem, threshold)?;
    for attempt in 1..=max_attempts {
        let x = sample_uniform(&problem.domain, rng);
        let value = problem.objective.value(&x);
        if value < threshold {
            return Ok(RestrictedSample {
                x,
                value,
                attempts: attempt,
            });
        }
    }
    Err(Error::RejectionBudgetExhausted {
        threshold,
        attempts: max_attempts,
    })
}

/// Same law as [`sample_level_restricted`], drawn directly when the level
/// set is a ball centered at the optimum.
pub fn sample_level_set(
    problem: &BenchmarkProblem,
    threshold: f64,
    rng: &mut RandomStream,
    config: &SamplerConfig,
) -> Result<RestrictedSample> {
    check_threshold(problem, threshold)?;
    if config.strategy == LevelStrategy::Auto && problem.has_ball_level_sets() {
        let x = sample_ball(&problem.x_star, threshold - problem.y_star, rng);
        let value = problem.objective.value(&x);
        return Ok(RestrictedSample {
            x,
            value,
            attempts: 1,
        });
    }
    sample_level_restricted(problem, threshold, rng, config.max_attempts)
}

/// With probability `m` uniform on `S_delta`, otherwise uniform on `S`.
pub fn sample_quantile_mixture(
    problem: &BenchmarkProblem,
    geom: &LevelSetGeometry,
    delta: f64,
    m: f64,
    rng: &mut RandomStream,
    config: &SamplerConfig,
) -> Result<MixtureSample> {
    SamplingDistribution::QuantileMixture {
        delta,
        mix_weight: m,
    }
    .validate(problem)?;
    if rng.bernoulli(m) {
        let y_delta = geom.value_of_quantile(delta)?;
        let s = sample_level_set(problem, y_delta, rng, config)?;
        Ok(MixtureSample {
            x: s.x,
            value: s.value,
            focused: true,
        })
    } else {
        let x = sample_uniform(&problem.domain, rng);
        let value = problem.objective.value(&x);
        Ok(MixtureSample {
            x,
            value,
            focused: false,
        })
    }
}

/// Draw from any [`SamplingDistribution`], returning the point and its value.
pub fn sample(
    dist: &SamplingDistribution,
    problem: &BenchmarkProblem,
    geom: &LevelSetGeometry,
    rng: &mut RandomStream,
    config: &SamplerConfig,
) -> Result<(Vec<f64>, f64)> {
    dist.validate(problem)?;
    Ok(match *dist {
        SamplingDistribution::UniformOnDomain => {
            let x = sample_uniform(&problem.domain, rng);
            let v = problem.objective.value(&x);
            (x, v)
        }
        SamplingDistribution::LevelRestricted { threshold } => {
            let s = sample_level_set(problem, threshold, rng, config)?;
            (s.x, s.value)
        }
        SamplingDistribution::QuantileMixture { delta, mix_weight } => {
            let s = sample_quantile_mixture(problem, geom, delta, mix_weight, rng, config)?;
            (s.x, s.value)
        }
    })
}

/// Kolmogorov-Smirnov statistic of `sample` against a continuous CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let m = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = cdf(v);
            (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere2() -> BenchmarkProblem {
        BenchmarkProblem::sphere(2, 1.0, 0.0).unwrap()
    }

    #[test]
    fn uniform_ball_area_fraction() {
        let p = sphere2();
        let mut rng = RandomStream::new(1, 0);
        let m = 1_000_000;
        let mut inner = 0;
        for _ in 0..m {
            let x = sample_uniform(&p.domain, &mut rng);
            assert!(p.domain.contains(&x));
            if p.objective.value(&x) <= 0.5 {
                inner += 1;
            }
        }
        let frac = inner as f64 / m as f64;
        assert!((frac - 0.25).abs() <= 0.0013, "{frac}");
    }

    #[test]
    fn uniform_box_mean() {
        let d = DomainSpec::cube(1, 0.0, 1.0).unwrap();
        let mut rng = RandomStream::new(2, 0);
        let m = 1_000_000;
        let mut s = 0.0;
        for _ in 0..m {
            let x = sample_uniform(&d, &mut rng);
            assert!(d.contains(&x));
            s += x[0];
        }
        assert!((s / m as f64 - 0.5).abs() <= 0.001);
    }

    #[test]
    fn rejection_at_full_threshold_accepts_everything() {
        let p = sphere2();
        let mut rng = RandomStream::new(3, 0);
        let total: u64 = (0..1000)
            .map(|_| {
                sample_level_restricted(&p, p.y_max, &mut rng, 10)
                    .unwrap()
                    .attempts
            })
            .sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn rejection_acceptance_and_radial_law() {
        let p = sphere2();
        let mut rng = RandomStream::new(4, 0);
        let m = 100_000;
        let mut attempts = 0;
        let mut radii = Vec::with_capacity(m);
        for _ in 0..m {
            let s = sample_level_restricted(&p, 0.5, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
            assert!(s.value < 0.5);
            attempts += s.attempts;
            radii.push(s.value);
        }
        let rate = m as f64 / attempts as f64;
        assert!((rate - 0.25).abs() <= 0.005, "{rate}");
        let ks = ks_statistic(&mut radii, |r| (r / 0.5).powi(2));
        assert!(ks < 1.63 / (m as f64).sqrt(), "ks {ks}");
    }

    #[test]
    fn direct_level_sampler_has_the_same_radial_law() {
        let p = BenchmarkProblem::sphere(3, 2.0, 0.0).unwrap();
        let mut rng = RandomStream::new(5, 0);
        let m = 100_000;
        let mut radii: Vec<f64> = (0..m)
            .map(|_| {
                sample_level_set(&p, 0.7, &mut rng, &SamplerConfig::default())
                    .unwrap()
                    .value
            })
            .collect();
        assert!(radii.iter().all(|r| *r < 0.7));
        let ks = ks_statistic(&mut radii, |r| (r / 0.7).powi(3));
        assert!(ks < 1.63 / (m as f64).sqrt(), "ks {ks}");
    }

    #[test]
    fn rejection_budget_is_an_error() {
        let p = sphere2();
        let mut rng = RandomStream::new(6, 0);
        assert!(matches!(
            sample_level_restricted(&p, 1e-6, &mut rng, 100),
            Err(Error::RejectionBudgetExhausted { .. })
        ));
        assert!(sample_level_restricted(&p, 0.0, &mut rng, 100).is_err());
        assert!(sample_level_restricted(&p, 1.5, &mut rng, 100).is_err());
    }

    #[test]
    fn mixture_fraction_below_quantile_value() {
        let p = sphere2();
        let g = LevelSetGeometry::analytic(&p).unwrap();
        assert!((g.value_of_quantile(0.25).unwrap() - 0.5).abs() < 1e-12);
        let mut rng = RandomStream::new(7, 0);
        let m = 100_000;
        let cfg = SamplerConfig::default();
        let hits = (0..m)
            .filter(|_| {
                sample_quantile_mixture(&p, &g, 0.25, 0.5, &mut rng, &cfg)
                    .unwrap()
                    .value
                    < 0.5
            })
            .count();
        let frac = hits as f64 / m as f64;
        assert!((frac - 0.625).abs() <= 0.005, "{frac}");
    }

    #[test]
    fn mixture_dominates_uniform_on_grid() {
        let p = sphere2();
        let g = LevelSetGeometry::analytic(&p).unwrap();
        let mut rng = RandomStream::new(8, 0);
        let m = 100_000;
        let cfg = SamplerConfig::default();
        let mut vals: Vec<f64> = (0..m)
            .map(|_| {
                sample_quantile_mixture(&p, &g, 0.1, 0.3, &mut rng, &cfg)
                    .unwrap()
                    .value
            })
            .collect();
        vals.sort_by(f64::total_cmp);
        for i in 1..=50 {
            let y = i as f64 / 50.0;
            let emp = vals.partition_point(|v| *v <= y) as f64 / m as f64;
            assert!(emp >= g.quantile(y) - 0.01, "y={y}");
        }
    }

    #[test]
    fn full_mixture_is_uniform() {
        let p = sphere2();
        let g = LevelSetGeometry::analytic(&p).unwrap();
        let mut rng = RandomStream::new(9, 0);
        let cfg = SamplerConfig::default();
        let mut radii: Vec<f64> = (0..50_000)
            .map(|_| {
                sample_quantile_mixture(&p, &g, 1.0, 1.0, &mut rng, &cfg)
                    .unwrap()
                    .value
            })
            .collect();
        let ks = ks_statistic(&mut radii, |r| r * r);
        assert!(ks < 1.63 / (50_000f64).sqrt());
        assert!(sample_quantile_mixture(&p, &g, 0.0, 0.5, &mut rng, &cfg).is_err());
        assert!(sample_quantile_mixture(&p, &g, 0.5, 0.0, &mut rng, &cfg).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = BenchmarkProblem::default_box(3, 0.0).unwrap();
        let draw = || {
            let mut rng = RandomStream::new(42, 5);
            (0..20)
                .map(|_| sample_level_restricted(&p, 0.5, &mut rng, 1000).unwrap().x)
                .collect::<Vec<_>>()
        };
        let (a, b) = (draw(), draw());
        for (u, v) in a.iter().zip(&b) {
            for (s, t) in u.iter().zip(v) {
                assert_eq!(s.to_bits(), t.to_bits());
            }
        }
    }
}
