//! Benchmark problems with exactly evaluable objectives and Gaussian noise.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::rng::RandomStream;

/// Tolerance on domain membership.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl DomainSpec {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = DomainSpec::Ball { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn cube(n: usize, lower: f64, upper: f64) -> Result<Self> {
        let d = DomainSpec::Box {
            lower: vec![lower; n],
            upper: vec![upper; n],
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::InvalidDomain("dimension must be at least 1".into()));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidDomain(format!(
                        "ball radius {radius} must be > 0"
                    )));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidDomain("non-finite ball center".into()));
                }
            }
            DomainSpec::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::InvalidDomain("dimension must be at least 1".into()));
                }
                if lower.len() != upper.len() {
                    return Err(Error::InvalidDomain("box bounds differ in length".into()));
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if !(l < u) || !l.is_finite() || !u.is_finite() {
                        return Err(Error::InvalidDomain(format!(
                            "box needs lower < upper in coordinate {i} ({l} vs {u})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Box { lower, .. } => lower.len(),
        }
    }

    /// Greatest distance between two points of the domain.
    pub fn diameter(&self) -> f64 {
        match self {
            DomainSpec::Ball { radius, .. } => 2.0 * radius,
            DomainSpec::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => {
                unit_ball_volume(center.len()) * radius.powi(center.len() as i32)
            }
            DomainSpec::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| u - l).product()
            }
        }
    }

    /// Distance by which `x` lies outside the domain (0 when inside).
    pub fn excess(&self, x: &[f64]) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => (distance(x, center) - radius).max(0.0),
            DomainSpec::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(xi, (l, u))| (l - xi).max(xi - u).max(0.0))
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension() && self.excess(x) <= BOUNDARY_TOLERANCE
    }
}

/// Volume of the unit ball in `n` dimensions, pi^(n/2) / Gamma(n/2 + 1).
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_n = 2 pi / n * V_{n-2}
    let (mut v, start) = if n.is_multiple_of(2) {
        (1.0, 2)
    } else {
        (2.0, 3)
    };
    let mut k = start;
    while k <= n {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Euclidean distance, scaled so that tiny differences do not underflow.
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale
        * a.iter()
            .zip(b)
            .map(|(x, y)| ((x - y) / scale).powi(2))
            .sum::<f64>()
            .sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// One replication is `f(x) + sigma * Z` with `Z ~ N(0, 1)`.
    GaussianAdditive { sigma: f64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        check_range("sigma", sigma, sigma >= 0.0, ">= 0")?;
        Ok(NoiseModel::GaussianAdditive { sigma })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            NoiseModel::GaussianAdditive { sigma } => *sigma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// `f(x) = |x - center|`
    Distance { center: Vec<f64> },
    /// `f(x) = sum_i w_i (x_i - c_i)^2`
    WeightedQuadratic { center: Vec<f64>, weights: Vec<f64> },
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Distance { center } => distance(x, center),
            Objective::WeightedQuadratic { center, weights } => x
                .iter()
                .zip(center)
                .zip(weights)
                .map(|((xi, ci), wi)| wi * (xi - ci) * (xi - ci))
                .sum(),
        }
    }
}

/// An optimization problem over a bounded domain with known optimum, range,
/// Lipschitz constant and diameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub name: String,
    pub domain: DomainSpec,
    pub objective: Objective,
    pub x_star: Vec<f64>,
    pub y_star: f64,
    pub y_max: f64,
    pub lipschitz: f64,
    pub diameter: f64,
    pub noise: NoiseModel,
}

impl BenchmarkProblem {
    /// `f(x) = |x|` on the ball of radius `radius` centered at the origin.
    pub fn sphere(n: usize, radius: f64, sigma: f64) -> Result<Self> {
        let domain = DomainSpec::ball(vec![0.0; n], radius)?;
        Ok(Self {
            name: "sphere-ball".into(),
            diameter: domain.diameter(),
            domain,
            objective: Objective::Distance {
                center: vec![0.0; n],
            },
            x_star: vec![0.0; n],
            y_star: 0.0,
            y_max: radius,
            lipschitz: 1.0,
            noise: NoiseModel::gaussian(sigma)?,
        })
    }

    /// Weighted quadratic with its minimizer `center` strictly inside the box.
    pub fn box_quadratic(
        lower: Vec<f64>,
        upper: Vec<f64>,
        center: Vec<f64>,
        weights: Vec<f64>,
        sigma: f64,
    ) -> Result<Self> {
        let domain = DomainSpec::Box {
            lower: lower.clone(),
            upper: upper.clone(),
        };
        domain.validate()?;
        let n = lower.len();
        if center.len() != n || weights.len() != n {
            return Err(Error::InvalidDomain(
                "center and weights must match the box dimension".into(),
            ));
        }
        for i in 0..n {
            if !(center[i] > lower[i] && center[i] < upper[i]) {
                return Err(Error::InvalidDomain(format!(
                    "minimizer coordinate {i} must lie strictly inside the box"
                )));
            }
            check_range("weight", weights[i], weights[i] > 0.0, "> 0")?;
        }
        // The farthest corner maximizes both f and |grad f| coordinate-wise.
        let far: Vec<f64> = (0..n)
            .map(|i| (center[i] - lower[i]).max(upper[i] - center[i]))
            .collect();
        let y_max = (0..n).map(|i| weights[i] * far[i] * far[i]).sum();
        let lipschitz = 2.0
            * (0..n)
                .map(|i| (weights[i] * far[i]).powi(2))
                .sum::<f64>()
                .sqrt();
        Ok(Self {
            name: "box-quadratic".into(),
            diameter: domain.diameter(),
            domain,
            objective: Objective::WeightedQuadratic {
                center: center.clone(),
                weights,
            },
            x_star: center,
            y_star: 0.0,
            y_max,
            lipschitz,
            noise: NoiseModel::gaussian(sigma)?,
        })
    }

    /// The default box benchmark: an anisotropic quadratic on `[0, 1]^n`
    /// with an off-center minimizer.
    pub fn default_box(n: usize, sigma: f64) -> Result<Self> {
        let center = (0..n).map(|i| 0.4 + 0.1 * (i % 3) as f64 / 2.0).collect();
        let weights = (0..n).map(|i| 1.0 + i as f64).collect();
        Self::box_quadratic(vec![0.0; n], vec![1.0; n], center, weights, sigma)
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn sigma(&self) -> f64 {
        self.noise.sigma()
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        let mut p = self.clone();
        p.noise = NoiseModel::gaussian(sigma)?;
        Ok(p)
    }

    /// True when the level sets are balls centered at the optimum.
    pub fn has_ball_level_sets(&self) -> bool {
        match (&self.domain, &self.objective) {
            (DomainSpec::Ball { center, .. }, Objective::Distance { center: c }) => center == c,
            _ => false,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::InvalidDomain(format!(
                "point has dimension {}, domain has {}",
                x.len(),
                self.dimension()
            )));
        }
        let excess = self.domain.excess(x);
        if excess > BOUNDARY_TOLERANCE {
            return Err(Error::PointOutsideDomain { excess });
        }
        Ok(())
    }

    /// Exact objective value. Verification-only oracle access.
    pub fn evaluate_true(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.objective.value(x))
    }

    /// One noisy replication `g(x, chi)`.
    pub fn evaluate_noisy(&self, x: &[f64], rng: &mut RandomStream) -> Result<f64> {
        let f = self.evaluate_true(x)?;
        Ok(self.replicate(f, rng))
    }

    pub(crate) fn replicate(&self, f: f64, rng: &mut RandomStream) -> f64 {
        let sigma = self.sigma();
        if sigma == 0.0 {
            f
        } else {
            f + sigma * rng.standard_normal()
        }
    }
}
