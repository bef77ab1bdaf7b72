//! Finite-time bounds on iterations and function evaluations.

use serde::Serialize;

use crate::algorithms::theorem_replications;
use crate::error::{check_range, Error, Result};
use crate::geometry::LevelSetGeometry;
use crate::normal;
use crate::quadrature::integrate_pieces;

const INTEGRAL_REL_TOL: f64 = 1e-8;

/// `1 + integral_{y_star+eps}^{y_max} dp(t) / (b(t) p(t))` with
/// `p(t) = nu(S_t) / nu(S)` (uniform sampling distribution).
pub fn has_integral_bound(
    geom: &LevelSetGeometry,
    bettering: impl Fn(f64) -> f64,
    epsilon: f64,
) -> Result<f64> {
    let p = geom.problem();
    let lo = p.y_star + epsilon;
    check_range(
        "epsilon",
        epsilon,
        epsilon > 0.0 && lo < p.y_max,
        "in (0, y_max - y_star)",
    )?;
    let mut points = vec![lo];
    points.extend(
        geom.breakpoints()
            .iter()
            .copied()
            .filter(|k| *k > lo && *k < p.y_max),
    );
    points.push(p.y_max);
    // audit b on a grid including all breakpoints
    let audit = points
        .iter()
        .copied()
        .chain((0..=256).map(|i| lo + (p.y_max - lo) * i as f64 / 256.0));
    for t in audit {
        let b = bettering(t);
        if !(b > 0.0) {
            return Err(Error::NonPositiveBettering(b));
        }
    }
    let integrand = |t: f64| {
        let q = geom.quantile(t);
        if q > 0.0 {
            geom.quantile_density(t) / (bettering(t) * q)
        } else {
            0.0
        }
    };
    Ok(1.0 + integrate_pieces(integrand, &points, INTEGRAL_REL_TOL, 1e-14)?)
}

/// `1 + ln(ratio) / (gamma (1 - alpha) q)` where `ratio = nu(S) / nu(S_{y_star+eps})`.
pub fn hase_iteration_bound(
    gamma: f64,
    alpha: f64,
    q: f64,
    volume_ratio_s_to_eps: f64,
) -> Result<f64> {
    check_common(gamma, alpha, q)?;
    check_range(
        "volume_ratio",
        volume_ratio_s_to_eps,
        volume_ratio_s_to_eps >= 1.0,
        ">= 1",
    )?;
    Ok(1.0 + volume_ratio_s_to_eps.ln() / (gamma * (1.0 - alpha) * q))
}

fn check_common(gamma: f64, alpha: f64, q: f64) -> Result<()> {
    check_range("gamma", gamma, gamma > 0.0 && gamma <= 1.0, "in (0, 1]")?;
    check_range("alpha", alpha, (0.0..1.0).contains(&alpha), "in [0, 1)")?;
    check_range("q", q, q > 0.0 && q <= 1.0, "in (0, 1]")
}

/// `((q/(1-q) + (-ln q)/(1-q)^2 n) * 2 sigma z / (r_eps K_q))^2`, the factor
/// turning an iteration bound into an evaluation bound.
pub fn evaluation_prefactor(
    n: usize,
    q: f64,
    sigma: f64,
    alpha: f64,
    r_eps: f64,
    k_q: f64,
) -> Result<f64> {
    check_range("n", n as f64, n >= 1, ">= 1")?;
    check_range("q", q, q > 0.0 && q < 1.0, "in (0, 1)")?;
    check_range("sigma", sigma, sigma >= 0.0, ">= 0")?;
    check_range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "in (0, 1)")?;
    check_range("r_eps", r_eps, r_eps > 0.0, "> 0")?;
    check_range("K_q", k_q, k_q > 0.0, "> 0")?;
    let linear = q / (1.0 - q) + (-q.ln()) / ((1.0 - q) * (1.0 - q)) * n as f64;
    let scale = 2.0 * sigma * normal::z_half_alpha(alpha) / (r_eps * k_q);
    Ok((linear * scale).powi(2))
}

pub fn hase_evaluation_bound(
    n: usize,
    q: f64,
    sigma: f64,
    alpha: f64,
    r_eps: f64,
    k_q: f64,
    iteration_bound: f64,
) -> Result<f64> {
    check_range(
        "iteration_bound",
        iteration_bound,
        iteration_bound >= 1.0,
        ">= 1",
    )?;
    Ok(evaluation_prefactor(n, q, sigma, alpha, r_eps, k_q)? * iteration_bound)
}

/// `1 + n ln(L d / eps) / (gamma (1 - alpha) q)`.
pub fn lipschitz_iteration_bound(
    n: usize,
    gamma: f64,
    alpha: f64,
    q: f64,
    lipschitz: f64,
    diameter: f64,
    epsilon: f64,
) -> Result<f64> {
    check_common(gamma, alpha, q)?;
    check_range("n", n as f64, n >= 1, ">= 1")?;
    check_range("epsilon", epsilon, epsilon > 0.0, "> 0")?;
    let ratio = lipschitz * diameter / epsilon;
    check_range("L*d/epsilon", ratio, ratio >= 1.0, ">= 1")?;
    Ok(1.0 + n as f64 * ratio.ln() / (gamma * (1.0 - alpha) * q))
}

#[allow(clippy::too_many_arguments)]
pub fn cubic_evaluation_bound(
    n: usize,
    gamma: f64,
    alpha: f64,
    q: f64,
    sigma: f64,
    r_eps: f64,
    k_q: f64,
    lipschitz: f64,
    diameter: f64,
    epsilon: f64,
) -> Result<f64> {
    let iterations = lipschitz_iteration_bound(n, gamma, alpha, q, lipschitz, diameter, epsilon)?;
    hase_evaluation_bound(n, q, sigma, alpha, r_eps, k_q, iterations)
}

/// Parameters that, together with a geometry, determine every bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundParams {
    pub gamma: f64,
    pub alpha: f64,
    pub q: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub gamma: f64,
    pub alpha: f64,
    pub q: f64,
    pub n: usize,
    pub sigma: f64,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub d: f64,
    pub r_eps: f64,
    #[serde(rename = "K_q")]
    pub k_q: f64,
    pub kappa_q: f64,
    pub volume_ratio_s_to_eps: f64,
    #[serde(rename = "R_theorem1")]
    pub r_theorem1: u64,
    pub iteration_bound: f64,
    pub evaluation_bound: f64,
    pub lipschitz_iteration_bound: f64,
    pub cubic_evaluation_bound: f64,
    pub has_integral_bound: Option<f64>,
    pub qase_iteration_bound: f64,
    pub qase_evaluation_bound: f64,
    pub qase_lipschitz_iteration_bound: f64,
    pub qase_cubic_evaluation_bound: f64,
    /// The QAS-E displays are term-for-term those of HAS-E.
    pub qase_shares_hase_formulas: bool,
}

/// The QAS-E iteration, evaluation, Lipschitz and cubic bounds.
pub fn qase_bounds(report: &BoundReport) -> [f64; 4] {
    [
        report.iteration_bound,
        report.evaluation_bound,
        report.lipschitz_iteration_bound,
        report.cubic_evaluation_bound,
    ]
}

pub fn bound_report(
    geom: &LevelSetGeometry,
    params: BoundParams,
    with_integral: bool,
) -> Result<BoundReport> {
    let p = geom.problem();
    let n = p.dimension();
    let sigma = p.sigma();
    let BoundParams {
        gamma,
        alpha,
        q,
        epsilon,
    } = params;
    let target = p.y_star + epsilon;
    let kq = geom.compute_kq(q, epsilon)?;
    let r_eps = geom.inscribed_radius(target)?;
    let volume_ratio = 1.0 / geom.quantile(target);
    let r_theorem1 = theorem_replications(geom, q, alpha, epsilon)?;
    let iteration_bound = hase_iteration_bound(gamma, alpha, q, volume_ratio)?;
    let evaluation_bound =
        hase_evaluation_bound(n, q, sigma, alpha, r_eps, kq.k_q, iteration_bound)?;
    let lipschitz =
        lipschitz_iteration_bound(n, gamma, alpha, q, p.lipschitz, p.diameter, epsilon)?;
    let cubic = cubic_evaluation_bound(
        n,
        gamma,
        alpha,
        q,
        sigma,
        r_eps,
        kq.k_q,
        p.lipschitz,
        p.diameter,
        epsilon,
    )?;
    let b = gamma * (1.0 - alpha) * q;
    let integral = if with_integral {
        Some(has_integral_bound(geom, |_| b, epsilon)?)
    } else {
        None
    };
    let mut report = BoundReport {
        gamma,
        alpha,
        q,
        n,
        sigma,
        epsilon,
        lipschitz: p.lipschitz,
        d: p.diameter,
        r_eps,
        k_q: kq.k_q,
        kappa_q: kq.kappa_q,
        volume_ratio_s_to_eps: volume_ratio,
        r_theorem1,
        iteration_bound,
        evaluation_bound,
        lipschitz_iteration_bound: lipschitz,
        cubic_evaluation_bound: cubic,
        has_integral_bound: integral,
        qase_iteration_bound: 0.0,
        qase_evaluation_bound: 0.0,
        qase_lipschitz_iteration_bound: 0.0,
        qase_cubic_evaluation_bound: 0.0,
        qase_shares_hase_formulas: true,
    };
    let [a, b, c, d] = qase_bounds(&report);
    report.qase_iteration_bound = a;
    report.qase_evaluation_bound = b;
    report.qase_lipschitz_iteration_bound = c;
    report.qase_cubic_evaluation_bound = d;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::Bettering;
    use crate::estimation::{required_replications, EstimateConfig};
    use crate::problem::BenchmarkProblem;
    use approx::assert_relative_eq;

    const Z975: f64 = 1.959_963_984_540_054;

    fn sphere(n: usize, sigma: f64) -> LevelSetGeometry {
        LevelSetGeometry::analytic(&BenchmarkProblem::sphere(n, 1.0, sigma).unwrap()).unwrap()
    }

    #[test]
    fn integral_bound_constant_b() {
        let v = has_integral_bound(&sphere(1, 0.0), |_| 0.5, 0.1).unwrap();
        assert_relative_eq!(v, 1.0 + 2.0 * 10f64.ln(), epsilon = 1e-9);
        assert_relative_eq!(v, 5.605170, epsilon = 1e-6);
        let v = has_integral_bound(&sphere(2, 0.0), |_| 0.5, 0.1).unwrap();
        assert_relative_eq!(v, 10.21034, epsilon = 1e-5);
        let v = has_integral_bound(&sphere(2, 0.0), |_| 1.0, 1.0 - 1e-9).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        assert!(matches!(
            has_integral_bound(&sphere(2, 0.0), |y| y - 0.5, 0.1),
            Err(Error::NonPositiveBettering(_))
        ));
    }

    #[test]
    fn integral_bound_variable_b() {
        // b(t) = t on the 1-d sphere: integral of 1/t^2 from eps to 1
        let b = Bettering::Linear {
            at_optimum: 0.0,
            at_max: 1.0,
        };
        let v = has_integral_bound(&sphere(1, 0.0), |t| b.probability(t, 0.0, 1.0), 0.2).unwrap();
        assert_relative_eq!(v, 1.0 + (1.0 / 0.2 - 1.0), epsilon = 1e-7);
    }

    #[test]
    fn iteration_bound_examples() {
        assert_eq!(hase_iteration_bound(0.3, 0.1, 0.2, 1.0).unwrap(), 1.0);
        let v = hase_iteration_bound(1.0, 0.05, 0.5, 100.0).unwrap();
        assert_relative_eq!(v, 1.0 + 100f64.ln() / 0.475, epsilon = 1e-12);
        assert_relative_eq!(v, 10.6951, epsilon = 1e-4);
        let half = hase_iteration_bound(1.0, 0.05, 0.25, 100.0).unwrap();
        assert_relative_eq!(half - 1.0, 2.0 * (v - 1.0), epsilon = 1e-12);
        assert!(hase_iteration_bound(1.0, 0.05, 0.5, 0.5).is_err());
        assert!(hase_iteration_bound(0.0, 0.05, 0.5, 2.0).is_err());
    }

    #[test]
    fn evaluation_bound_examples() {
        assert_eq!(
            hase_evaluation_bound(2, 0.5, 0.0, 0.05, 0.5, 1.0, 10.0).unwrap(),
            0.0
        );
        let it = hase_iteration_bound(1.0, 0.05, 0.5, 100.0).unwrap();
        let v = hase_evaluation_bound(2, 0.5, 1.0, 0.05, 0.5, 1.0, it).unwrap();
        // independent evaluation of the display
        let linear = 1.0 + 2f64.ln() / 0.25 * 2.0;
        let oracle = (linear * 2.0 * Z975 / 0.5).powi(2) * it;
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        let r = required_replications(0.5, 2, &EstimateConfig::new(0.05, 1.0).unwrap(), 0.5, 1.0)
            .unwrap();
        assert_eq!(r, 359);
        assert!(v >= r as f64 * it);
        let doubled = hase_evaluation_bound(2, 0.5, 2.0, 0.05, 0.5, 1.0, it).unwrap();
        assert_relative_eq!(doubled, 4.0 * v, max_relative = 1e-12);
    }

    #[test]
    fn lipschitz_bound_examples() {
        let v = lipschitz_iteration_bound(2, 1.0, 0.05, 0.5, 1.0, 2.0, 0.1).unwrap();
        assert_relative_eq!(v, 1.0 + 2.0 / 0.475 * 20f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(v, 13.61361, epsilon = 1e-5);
        assert_eq!(
            lipschitz_iteration_bound(3, 1.0, 0.05, 0.5, 1.0, 0.1, 0.1).unwrap(),
            1.0
        );
        for n in 1..40 {
            let a = lipschitz_iteration_bound(n, 0.7, 0.1, 0.3, 2.0, 3.0, 0.05).unwrap();
            let b = lipschitz_iteration_bound(2 * n, 0.7, 0.1, 0.3, 2.0, 3.0, 0.05).unwrap();
            assert_relative_eq!(b - 1.0, 2.0 * (a - 1.0), max_relative = 1e-12);
        }
        assert!(lipschitz_iteration_bound(2, 1.0, 0.05, 0.5, 1.0, 0.05, 0.1).is_err());
    }

    #[test]
    fn cubic_bound_examples() {
        let args = |n: usize, sigma: f64| {
            cubic_evaluation_bound(n, 1.0, 0.05, 0.5, sigma, 0.1, 0.02, 1.0, 2.0, 0.1).unwrap()
        };
        assert_eq!(args(3, 0.0), 0.0);
        let li = lipschitz_iteration_bound(5, 1.0, 0.05, 0.5, 1.0, 2.0, 0.1).unwrap();
        assert_eq!(
            args(5, 0.3),
            hase_evaluation_bound(5, 0.5, 0.3, 0.05, 0.1, 0.02, li).unwrap()
        );
        let r32 = args(32, 0.05) / 32f64.powi(3);
        let r64 = args(64, 0.05) / 64f64.powi(3);
        assert!(((r64 - r32) / r32).abs() < 0.02);
    }

    #[test]
    fn report_invariants() {
        for n in 1..=4 {
            let g = sphere(n, 0.05);
            let rep = bound_report(
                &g,
                BoundParams {
                    gamma: 1.0,
                    alpha: 0.05,
                    q: 0.5,
                    epsilon: 0.1,
                },
                true,
            )
            .unwrap();
            assert!(rep.evaluation_bound >= rep.r_theorem1 as f64 * rep.iteration_bound);
            assert!(rep.lipschitz_iteration_bound >= rep.iteration_bound);
            assert_eq!(rep.qase_iteration_bound, rep.iteration_bound);
            assert_eq!(rep.qase_evaluation_bound, rep.evaluation_bound);
            assert!((rep.has_integral_bound.unwrap() - rep.iteration_bound).abs() < 1e-6);
        }
        let rep = bound_report(
            &sphere(2, 0.0),
            BoundParams {
                gamma: 1.0,
                alpha: 0.05,
                q: 0.5,
                epsilon: 0.1,
            },
            false,
        )
        .unwrap();
        assert_eq!(rep.r_theorem1, 1);
        assert_eq!(rep.evaluation_bound, 0.0);
        let json = serde_json::to_value(&rep).unwrap();
        assert!(json.get("R_theorem1").is_some());
        assert_eq!(json["qase_shares_hase_formulas"], true);
    }

    #[test]
    fn evaluation_bound_dominates_theorem_replications_on_lattice() {
        for &q in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for n in [1usize, 2, 3, 5, 8, 16] {
                for &sigma in &[0.01, 0.1, 1.0] {
                    for &alpha in &[0.01, 0.05, 0.2] {
                        for &(r, k) in &[(0.1, 0.01), (0.5, 1.0), (1.0, 0.3)] {
                            let est = EstimateConfig::new(alpha, sigma).unwrap();
                            let rr = required_replications(q, n, &est, r, k).unwrap();
                            let it = 7.5;
                            let eb = hase_evaluation_bound(n, q, sigma, alpha, r, k, it).unwrap();
                            // ceil adds at most one replication
                            assert!(eb >= (rr as f64 - 1.0) * it);
                            let real =
                                crate::estimation::replication_bound(q, n, &est, r, k).unwrap();
                            assert!(eb >= real * it * (1.0 - 1e-12));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bound_monotonicity_lattice() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        for &g in &grid {
            for &q in &grid[..4] {
                for n in 1..10usize {
                    for &s in &[0.01, 0.1, 1.0] {
                        let li = |n, g, q| {
                            lipschitz_iteration_bound(n, g, 0.05, q, 1.0, 2.0, 0.1).unwrap()
                        };
                        let cu = |n, g, s| {
                            cubic_evaluation_bound(n, g, 0.05, q, s, 0.1, 0.02, 1.0, 2.0, 0.1)
                                .unwrap()
                        };
                        let it = |g, q| hase_iteration_bound(g, 0.05, q, 50.0).unwrap();
                        if g < 1.0 {
                            assert!(li(n, g + 0.2, q) <= li(n, g, q));
                            assert!(cu(n, g + 0.2, s) <= cu(n, g, s));
                            assert!(it(g + 0.2, q) <= it(g, q));
                        }
                        assert!(li(n, g, q + 0.2) <= li(n, g, q));
                        assert!(it(g, q + 0.2) <= it(g, q));
                        assert!(li(n + 1, g, q) >= li(n, g, q));
                        assert!(cu(n + 1, g, s) >= cu(n, g, s));
                        assert!(cu(n, g, s * 2.0) >= cu(n, g, s));
                    }
                }
            }
        }
    }
}
