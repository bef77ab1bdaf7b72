//! Sample-mean estimation with one-sided upper confidence values and the
//! replication count that guarantees a level-set volume ratio.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::normal;
use crate::problem::BenchmarkProblem;
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub z_half_alpha: f64,
}

impl EstimateConfig {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        check_range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "in (0, 1)")?;
        check_range("sigma", sigma, sigma >= 0.0, ">= 0")?;
        Ok(Self {
            alpha,
            sigma,
            z_half_alpha: normal::z_half_alpha(alpha),
        })
    }

    /// `sigma * z_{alpha/2} / sqrt(R)`
    pub fn half_width(&self, replications: u64) -> f64 {
        self.sigma * self.z_half_alpha / (replications as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub upper: f64,
    pub replications: u64,
    pub half_width: f64,
}

pub fn sample_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyReplicationList);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn upper_confidence(mean: f64, config: &EstimateConfig, replications: u64) -> Result<Estimate> {
    if replications == 0 {
        return Err(Error::NonPositiveReplicationCount);
    }
    let half_width = config.half_width(replications);
    Ok(Estimate {
        mean,
        upper: mean + half_width,
        replications,
        half_width,
    })
}

/// The two-sided confidence event `f <= upper <= f + 2 * half_width`.
pub fn ci_event_holds(true_value: f64, estimate: &Estimate) -> bool {
    true_value <= estimate.upper && estimate.upper <= true_value + 2.0 * estimate.half_width
}

/// Smallest integer `R >= 1` with
/// `R >= (q^(1/n) * 2 * sigma * z / ((1 - q^(1/n)) * r_eps * K_q))^2`.
pub fn required_replications(
    q: f64,
    n: usize,
    config: &EstimateConfig,
    r_eps: f64,
    k_q: f64,
) -> Result<u64> {
    Ok(replication_bound(q, n, config, r_eps, k_q)?.ceil().max(1.0) as u64)
}

/// The real-valued replication bound before rounding.
pub fn replication_bound(
    q: f64,
    n: usize,
    config: &EstimateConfig,
    r_eps: f64,
    k_q: f64,
) -> Result<f64> {
    check_range("q", q, q > 0.0 && q < 1.0, "in (0, 1)")?;
    check_range("n", n as f64, n >= 1, ">= 1")?;
    check_range("r_eps", r_eps, r_eps > 0.0, "> 0")?;
    check_range("K_q", k_q, k_q > 0.0, "> 0")?;
    let root = q.powf(1.0 / n as f64);
    let ratio = root * 2.0 * config.sigma * config.z_half_alpha / ((1.0 - root) * r_eps * k_q);
    Ok(ratio * ratio)
}

/// How an `R`-replication sample mean is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Draw the sample mean directly from its exact law `N(f, sigma / sqrt(R))`.
    #[default]
    Aggregate,
    /// Draw and average `R` individual replications.
    Replicate,
}

/// Estimate the objective at a point whose true value is `true_value`.
pub fn estimate_at(
    problem: &BenchmarkProblem,
    true_value: f64,
    replications: u64,
    config: &EstimateConfig,
    mode: EstimatorMode,
    rng: &mut RandomStream,
) -> Result<Estimate> {
    if replications == 0 {
        return Err(Error::NonPositiveReplicationCount);
    }
    let sigma = problem.sigma();
    let mean = if sigma == 0.0 {
        true_value
    } else {
        match mode {
            EstimatorMode::Aggregate => {
                true_value + sigma / (replications as f64).sqrt() * rng.standard_normal()
            }
            EstimatorMode::Replicate => {
                let mut sum = 0.0;
                for _ in 0..replications {
                    sum += problem.replicate(true_value, rng);
                }
                sum / replications as f64
            }
        }
    };
    upper_confidence(mean, config, replications)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const Z975: f64 = 1.959_963_984_540_054;

    #[test]
    fn sample_mean_examples() {
        assert_eq!(sample_mean(&[2.0, 4.0, 6.0]).unwrap(), 4.0);
        assert_eq!(sample_mean(&[-3.25]).unwrap(), -3.25);
        assert_eq!(sample_mean(&[]), Err(Error::EmptyReplicationList));

        let mut rng = RandomStream::new(11, 0);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| 1.0 + 0.5 * rng.standard_normal())
            .collect();
        assert!((sample_mean(&draws).unwrap() - 1.0).abs() <= 0.02);
    }

    #[test]
    fn upper_confidence_examples() {
        let cfg = EstimateConfig::new(0.05, 1.0).unwrap();
        assert!((cfg.z_half_alpha - Z975).abs() < 1e-9);
        let e = upper_confidence(4.0, &cfg, 4).unwrap();
        assert_relative_eq!(e.upper, 4.979982, epsilon = 1e-6);
        assert_eq!(e.upper, e.mean + e.half_width);

        let e = upper_confidence(0.0, &cfg, 1).unwrap();
        assert_relative_eq!(e.upper, 1.959964, epsilon = 1e-6);

        let zero = EstimateConfig::new(0.2, 0.0).unwrap();
        assert_eq!(upper_confidence(3.5, &zero, 17).unwrap().upper, 3.5);

        assert_eq!(
            upper_confidence(1.0, &cfg, 0),
            Err(Error::NonPositiveReplicationCount)
        );
    }

    #[test]
    fn half_width_monotonicity() {
        let cfg = EstimateConfig::new(0.05, 1.0).unwrap();
        for r in 1..200u64 {
            assert!(cfg.half_width(r + 1) < cfg.half_width(r));
        }
        let wider = EstimateConfig::new(0.01, 1.0).unwrap();
        let noisier = EstimateConfig::new(0.05, 2.0).unwrap();
        assert!(wider.half_width(5) > cfg.half_width(5));
        assert!(noisier.half_width(5) > cfg.half_width(5));
    }

    #[test]
    fn ci_event_examples() {
        let hold = Estimate {
            mean: 1.05,
            upper: 1.15,
            replications: 1,
            half_width: 0.1,
        };
        assert!(ci_event_holds(1.0, &hold));
        let low = Estimate {
            mean: 0.7,
            upper: 0.8,
            replications: 1,
            half_width: 0.1,
        };
        assert!(!ci_event_holds(1.0, &low));
    }

    #[test]
    fn required_replications_examples() {
        let zero = EstimateConfig::new(0.05, 0.0).unwrap();
        assert_eq!(required_replications(0.5, 2, &zero, 0.5, 1.0).unwrap(), 1);

        let cfg = EstimateConfig::new(0.05, 1.0).unwrap();
        // (sqrt(0.5) * 2 * z / ((1 - sqrt(0.5)) * 0.5))^2 = 358.24...
        let root = 0.5f64.sqrt();
        let oracle = (root * 2.0 * Z975 / ((1.0 - root) * 0.5)).powi(2);
        assert!(oracle > 358.0 && oracle < 359.0);
        assert_eq!(required_replications(0.5, 2, &cfg, 0.5, 1.0).unwrap(), 359);
        assert!(
            required_replications(0.9, 2, &cfg, 0.5, 1.0).unwrap()
                > required_replications(0.5, 2, &cfg, 0.5, 1.0).unwrap()
        );

        assert!(required_replications(1.0, 2, &cfg, 0.5, 1.0).is_err());
        assert!(required_replications(0.5, 2, &cfg, 0.0, 1.0).is_err());
        assert!(required_replications(0.5, 2, &cfg, 0.5, -1.0).is_err());
        assert!(required_replications(0.5, 0, &cfg, 0.5, 1.0).is_err());
    }

    #[test]
    fn required_replications_lattice_monotonicity() {
        let qs = [0.1, 0.3, 0.5, 0.7, 0.9];
        let ns = [1usize, 2, 3, 5, 8];
        let sigmas = [0.01, 0.1, 1.0];
        let alphas = [0.01, 0.05, 0.2];
        let rs = [0.05, 0.2, 1.0];
        let ks = [0.01, 0.1, 1.0];
        let rr = |q: f64, n: usize, s: f64, a: f64, r: f64, k: f64| {
            required_replications(q, n, &EstimateConfig::new(a, s).unwrap(), r, k).unwrap()
        };
        for &q in &qs {
            for &n in &ns {
                for &s in &sigmas {
                    for &a in &alphas {
                        for &r in &rs {
                            for &k in &ks {
                                let base = rr(q, n, s, a, r, k);
                                assert!(rr((q + 0.05).min(0.95), n, s, a, r, k) >= base);
                                assert!(rr(q, n + 1, s, a, r, k) >= base);
                                assert!(rr(q, n, s * 1.5, a, r, k) >= base);
                                assert!(rr(q, n, s, a, r * 1.5, k) <= base);
                                assert!(rr(q, n, s, a, r, k * 1.5) <= base);
                                assert!(rr(q, n, s, a * 1.5, r, k) <= base);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn estimator_modes_share_the_law() {
        let p = BenchmarkProblem::sphere(1, 1.0, 0.3).unwrap();
        let cfg = EstimateConfig::new(0.05, 0.3).unwrap();
        for mode in [EstimatorMode::Aggregate, EstimatorMode::Replicate] {
            let mut rng = RandomStream::new(3, 1);
            let m = 20_000;
            let means: Vec<f64> = (0..m)
                .map(|_| estimate_at(&p, 0.4, 9, &cfg, mode, &mut rng).unwrap().mean)
                .collect();
            let mean = sample_mean(&means).unwrap();
            let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
            // sd of the sample mean is 0.1
            assert!(
                (mean - 0.4).abs() < 4.0 * 0.1 / (m as f64).sqrt(),
                "{mode:?}"
            );
            assert!((var - 0.01).abs() < 0.05 * 0.01, "{mode:?} var {var}");
        }
    }

    #[test]
    fn ci_coverage_replicate_mode() {
        let p = BenchmarkProblem::sphere(1, 1.0, 0.5).unwrap();
        let cfg = EstimateConfig::new(0.1, 0.5).unwrap();
        let mut rng = RandomStream::new(9, 0);
        let m = 20_000;
        let hits = (0..m)
            .filter(|_| {
                let e = estimate_at(&p, 0.3, 4, &cfg, EstimatorMode::Replicate, &mut rng).unwrap();
                ci_event_holds(0.3, &e)
            })
            .count();
        let freq = hits as f64 / m as f64;
        let margin = 4.0 * (0.1f64 * 0.9 / m as f64).sqrt();
        assert!(freq >= 0.9 - margin, "coverage {freq}");
    }
}
