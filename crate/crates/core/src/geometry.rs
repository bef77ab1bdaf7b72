//! Level-set geometry: volumes, inscribed radii, the quantile map and
//! `kappa_q` / `K_q`.
//!
//! Ball-shaped level sets (the sphere benchmark) are handled in closed form.
//! Everything else goes through a Monte Carlo estimate of the volume
//! fraction `p(y) = nu(S_y) / nu(S)` stored as a monotone piecewise-linear
//! interpolant.

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::problem::{BenchmarkProblem, DomainSpec, Objective};
use crate::rng::RandomStream;
use crate::samplers::sample_uniform;

/// Default number of uniform samples behind a Monte Carlo geometry.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

const KNOTS_PER_FAMILY: usize = 1024;
const KQ_GRID: usize = 2000;
const QUANTILE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryMode {
    Analytic,
    MonteCarlo,
}

#[derive(Clone, Debug)]
enum Fraction {
    /// `p(y) = ((y - y_star) / (y_max - y_star))^n`
    Ball { n: i32 },
    Interpolated {
        knots: Vec<f64>,
        values: Vec<f64>,
        samples: usize,
    },
}

#[derive(Clone, Debug)]
pub struct LevelSetGeometry {
    problem: BenchmarkProblem,
    total_volume: f64,
    fraction: Fraction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KqSpec {
    pub q: f64,
    pub epsilon: f64,
    pub kappa_q: f64,
    pub k_q: f64,
}

impl LevelSetGeometry {
    /// Closed-form geometry; only available for ball-shaped level sets.
    pub fn analytic(problem: &BenchmarkProblem) -> Result<Self> {
        if !problem.has_ball_level_sets() {
            return Err(Error::Unsupported(format!(
                "no closed-form geometry for '{}'",
                problem.name
            )));
        }
        Ok(Self {
            problem: problem.clone(),
            total_volume: problem.domain.volume(),
            fraction: Fraction::Ball {
                n: problem.dimension() as i32,
            },
        })
    }

    /// Monte Carlo geometry from `samples` uniform domain points.
    pub fn monte_carlo(problem: &BenchmarkProblem, samples: usize, seed: u64) -> Result<Self> {
        check_range("samples", samples as f64, samples >= 16, ">= 16")?;
        let mut rng = RandomStream::new(seed, 0);
        let mut values: Vec<f64> = (0..samples)
            .map(|_| {
                problem
                    .objective
                    .value(&sample_uniform(&problem.domain, &mut rng))
            })
            .collect();
        values.sort_by(f64::total_cmp);

        let span = problem.y_max - problem.y_star;
        let mut knots: Vec<f64> = (1..=KNOTS_PER_FAMILY)
            .map(|j| problem.y_star + span * j as f64 / KNOTS_PER_FAMILY as f64)
            .collect();
        // probability-stratified thresholds
        knots.extend((1..KNOTS_PER_FAMILY).map(|j| values[j * samples / KNOTS_PER_FAMILY]));
        knots.retain(|y| *y > problem.y_star && *y <= problem.y_max);
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let mut fractions: Vec<f64> = knots
            .iter()
            .map(|y| values.partition_point(|v| v < y) as f64 / samples as f64)
            .collect();
        isotonic_running_max(&mut fractions);
        if let Some(last) = fractions.last_mut() {
            if knots.last() == Some(&problem.y_max) {
                *last = 1.0;
            }
        }
        if knots.last() != Some(&problem.y_max) {
            knots.push(problem.y_max);
            fractions.push(1.0);
        }
        Ok(Self {
            problem: problem.clone(),
            total_volume: problem.domain.volume(),
            fraction: Fraction::Interpolated {
                knots,
                values: fractions,
                samples,
            },
        })
    }

    /// Analytic when possible, otherwise Monte Carlo with the default size.
    pub fn for_problem(problem: &BenchmarkProblem, seed: u64) -> Result<Self> {
        if problem.has_ball_level_sets() {
            Self::analytic(problem)
        } else {
            Self::monte_carlo(problem, DEFAULT_MC_SAMPLES, seed)
        }
    }

    pub fn mode(&self) -> GeometryMode {
        match self.fraction {
            Fraction::Ball { .. } => GeometryMode::Analytic,
            Fraction::Interpolated { .. } => GeometryMode::MonteCarlo,
        }
    }

    pub fn problem(&self) -> &BenchmarkProblem {
        &self.problem
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    fn check_value(&self, y: f64) -> Result<()> {
        let (lo, hi) = (self.problem.y_star, self.problem.y_max);
        if y > lo && y <= hi {
            Ok(())
        } else {
            Err(Error::ValueOutOfRange {
                value: y,
                lower: lo,
                upper: hi,
            })
        }
    }

    /// `nu(S_y) / nu(S)` for any real `y` (0 below the optimum, 1 above the
    /// maximum). This is the uniform-sampling quantile of `y`.
    pub fn quantile(&self, y: f64) -> f64 {
        let (lo, hi) = (self.problem.y_star, self.problem.y_max);
        if y <= lo {
            return 0.0;
        }
        if y >= hi {
            return 1.0;
        }
        match &self.fraction {
            Fraction::Ball { n } => ((y - lo) / (hi - lo)).powi(*n),
            Fraction::Interpolated { knots, values, .. } => {
                let i = knots.partition_point(|k| *k < y);
                let (y0, p0) = if i == 0 {
                    (lo, 0.0)
                } else {
                    (knots[i - 1], values[i - 1])
                };
                let (y1, p1) = (knots[i], values[i]);
                p0 + (p1 - p0) * (y - y0) / (y1 - y0)
            }
        }
    }

    /// Derivative of [`Self::quantile`]; the density of `f(X)` for uniform `X`.
    pub fn quantile_density(&self, y: f64) -> f64 {
        let (lo, hi) = (self.problem.y_star, self.problem.y_max);
        if y <= lo || y > hi {
            return 0.0;
        }
        match &self.fraction {
            Fraction::Ball { n } => {
                let span = hi - lo;
                *n as f64 * ((y - lo) / span).powi(n - 1) / span
            }
            Fraction::Interpolated { knots, values, .. } => {
                let i = knots.partition_point(|k| *k < y);
                let (y0, p0) = if i == 0 {
                    (lo, 0.0)
                } else {
                    (knots[i - 1], values[i - 1])
                };
                (values[i] - p0) / (knots[i] - y0)
            }
        }
    }

    /// Points where [`Self::quantile_density`] may jump.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.fraction {
            Fraction::Ball { .. } => &[],
            Fraction::Interpolated { knots, .. } => knots,
        }
    }

    /// `nu(S_y)`.
    pub fn level_set_volume(&self, y: f64) -> Result<f64> {
        self.check_value(y)?;
        Ok(self.quantile(y) * self.total_volume)
    }

    /// `nu(S_y)` together with its Monte Carlo standard error (0 when analytic).
    pub fn level_set_volume_with_error(&self, y: f64) -> Result<(f64, f64)> {
        let v = self.level_set_volume(y)?;
        let se = match &self.fraction {
            Fraction::Ball { .. } => 0.0,
            Fraction::Interpolated { samples, .. } => {
                let p = v / self.total_volume;
                (p * (1.0 - p) / *samples as f64).sqrt() * self.total_volume
            }
        };
        Ok((v, se))
    }

    /// Radius of the largest ball centered at `x_star` inside `S_y`.
    pub fn inscribed_radius(&self, y: f64) -> Result<f64> {
        self.check_value(y)?;
        let p = &self.problem;
        Ok(match (&p.objective, &p.domain) {
            (Objective::Distance { center }, domain) => {
                let wall = distance_to_boundary(domain, center);
                (y - p.y_star).min(wall)
            }
            (Objective::WeightedQuadratic { center, weights }, domain) => {
                let w_max = weights.iter().cloned().fold(0.0, f64::max);
                ((y - p.y_star) / w_max)
                    .sqrt()
                    .min(distance_to_boundary(domain, center))
            }
        })
    }

    /// `y_delta`: the objective value whose uniform sublevel probability is
    /// `delta`.
    pub fn value_of_quantile(&self, delta: f64) -> Result<f64> {
        check_range("delta", delta, delta > 0.0 && delta <= 1.0, "in (0, 1]")?;
        let (lo, hi) = (self.problem.y_star, self.problem.y_max);
        if let Fraction::Ball { n } = self.fraction {
            return Ok(lo + (hi - lo) * delta.powf(1.0 / n as f64));
        }
        let (mut a, mut b) = (lo, hi);
        while b - a > QUANTILE_TOLERANCE {
            let mid = 0.5 * (a + b);
            if self.quantile(mid) >= delta {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(b)
    }

    /// `nu(S_{y_low}) / nu(S_{y_high})`.
    pub fn volume_ratio(&self, y_low: f64, y_high: f64) -> Result<f64> {
        self.check_value(y_low)?;
        self.check_value(y_high)?;
        if y_low > y_high {
            return Err(Error::ValueOutOfRange {
                value: y_low,
                lower: self.problem.y_star,
                upper: y_high,
            });
        }
        if y_low == y_high {
            return Ok(1.0);
        }
        Ok(self.quantile(y_low) / self.quantile(y_high))
    }

    /// `kappa_q` and `K_q = kappa_q / d`, with the ratio condition required
    /// for `z` in `(y_star + epsilon, y_max)`.
    pub fn compute_kq(&self, q: f64, epsilon: f64) -> Result<KqSpec> {
        check_range("q", q, q > 0.0 && q < 1.0, "in (0, 1)")?;
        let span = self.problem.y_max - self.problem.y_star;
        check_range(
            "epsilon",
            epsilon,
            epsilon > 0.0 && epsilon < span,
            "in (0, y_max - y_star)",
        )?;
        let kappa_q = match self.fraction {
            Fraction::Ball { n } => epsilon * (q.powf(-1.0 / n as f64) - 1.0),
            Fraction::Interpolated { .. } => self.kappa_by_search(q, epsilon, span),
        };
        if !(kappa_q > 0.0) {
            return Err(Error::DegenerateKq { q, epsilon });
        }
        Ok(KqSpec {
            q,
            epsilon,
            kappa_q,
            k_q: kappa_q / self.problem.diameter,
        })
    }

    fn min_ratio(&self, zs: &[f64], kappa: f64) -> f64 {
        zs.iter()
            .map(|&z| self.quantile(z) / self.quantile(z + kappa))
            .fold(f64::INFINITY, f64::min)
    }

    fn kappa_by_search(&self, q: f64, epsilon: f64, span: f64) -> f64 {
        let lo = self.problem.y_star + epsilon;
        let hi = self.problem.y_max;
        let zs: Vec<f64> = (1..KQ_GRID)
            .map(|i| lo + (hi - lo) * i as f64 / KQ_GRID as f64)
            .collect();
        // the ratio condition is monotone in kappa; the cap stands in for
        // "every kappa works"
        if self.min_ratio(&zs, span) > q {
            return span;
        }
        let (mut a, mut b) = (0.0, span);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if self.min_ratio(&zs, mid) > q {
                a = mid;
            } else {
                b = mid;
            }
        }
        a
    }
}

fn distance_to_boundary(domain: &DomainSpec, x: &[f64]) -> f64 {
    match domain {
        DomainSpec::Ball { center, radius } => radius - crate::problem::distance(x, center),
        DomainSpec::Box { lower, upper } => x
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(xi, (l, u))| (xi - l).min(u - xi))
            .fold(f64::INFINITY, f64::min),
    }
}

fn isotonic_running_max(values: &mut [f64]) {
    let mut top = f64::NEG_INFINITY;
    for v in values.iter_mut() {
        top = top.max(*v);
        *v = top;
    }
}

/// `a / (1 - a) + (-ln a) / (1 - a)^2 * n`, the linear upper bound on
/// `a^(1/n) / (1 - a^(1/n))` for `n >= 1`.
pub fn lemma2_linear_bound(a: f64, n: f64) -> Result<f64> {
    check_range("a", a, a > 0.0 && a < 1.0, "in (0, 1)")?;
    check_range("n", n, n >= 1.0, ">= 1")?;
    Ok(a / (1.0 - a) + (-a.ln()) / ((1.0 - a) * (1.0 - a)) * n)
}

/// `a^(1/n) / (1 - a^(1/n))`.
pub fn root_ratio(a: f64, n: f64) -> f64 {
    let r = a.powf(1.0 / n);
    r / (1.0 - r)
}
