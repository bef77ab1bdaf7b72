//! Browser demo for `arsearch`. Each exported function takes a JSON request
//! and returns a JSON response, so the page needs no generated bindings for
//! structured types. The functions are plain Rust underneath and are tested
//! natively.

use arsearch::algorithms::{AlgorithmConfig, Runner, Trace, Variant};
use arsearch::bounds::{bound_report, BoundParams, BoundReport};
use arsearch::geometry::LevelSetGeometry;
use arsearch::population::run_population;
use arsearch::problem::BenchmarkProblem;
use arsearch::verification::{check_dominance, linear_grid, Population};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Sphere benchmark and algorithm parameters shared by every request.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Request {
    pub n: usize,
    pub sigma: f64,
    pub variant: Variant,
    pub gamma: f64,
    pub alpha: f64,
    pub q: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Population size (dominance only).
    pub runs: usize,
    /// Largest iteration compared (dominance only).
    pub k_max: usize,
    pub grid_points: usize,
}

impl Default for Request {
    fn default() -> Self {
        Self {
            n: 2,
            sigma: 0.05,
            variant: Variant::Hase,
            gamma: 1.0,
            alpha: 0.05,
            q: 0.5,
            epsilon: 0.1,
            seed: 0,
            runs: 400,
            k_max: 8,
            grid_points: 40,
        }
    }
}

const MAX_RUNS: usize = 20_000;
const MAX_ITERATIONS: usize = 10_000;

impl Request {
    pub fn parse(json: &str) -> Result<Self, String> {
        let r: Request = serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))?;
        if r.n == 0 || r.n > 50 {
            return Err("n must be between 1 and 50".into());
        }
        if r.runs == 0 || r.runs > MAX_RUNS {
            return Err(format!("runs must be between 1 and {MAX_RUNS}"));
        }
        if r.grid_points < 2 {
            return Err("grid_points must be at least 2".into());
        }
        Ok(r)
    }

    fn geometry(&self) -> Result<LevelSetGeometry, String> {
        let p = BenchmarkProblem::sphere(self.n, 1.0, self.sigma).map_err(|e| e.to_string())?;
        LevelSetGeometry::analytic(&p).map_err(|e| e.to_string())
    }

    fn config(&self, variant: Variant) -> AlgorithmConfig {
        AlgorithmConfig::new(variant)
            .gamma(self.gamma)
            .alpha(self.alpha)
            .q(self.q)
            .epsilon(self.epsilon)
            .max_iterations(MAX_ITERATIONS)
    }

    fn runner(&self, geom: &LevelSetGeometry, variant: Variant) -> Result<Runner, String> {
        Runner::new(geom, &self.config(variant)).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct TraceResponse {
    pub variant: Variant,
    pub target: f64,
    pub replications: Option<u64>,
    pub k: Vec<usize>,
    pub y_true: Vec<f64>,
    pub best_true: Vec<f64>,
    pub best_high: Vec<f64>,
    pub bettered: Vec<bool>,
    pub first_hit_iterations: Option<usize>,
    pub first_hit_replications: Option<u64>,
}

impl TraceResponse {
    fn from_trace(t: &Trace, target: f64) -> Self {
        let hit = t.first_hitting(target);
        let col = |f: fn(&arsearch::algorithms::IterationRecord) -> f64| {
            t.records.iter().map(f).collect()
        };
        Self {
            variant: t.config.variant,
            target,
            replications: t.replications,
            k: t.records.iter().map(|r| r.k).collect(),
            y_true: col(|r| r.y_true),
            best_true: col(|r| r.best_true),
            best_high: col(|r| r.best_high),
            bettered: t.records.iter().map(|r| r.bettered).collect(),
            first_hit_iterations: hit.map(|h| h.iterations),
            first_hit_replications: hit.map(|h| h.replications),
        }
    }
}

/// One run of the requested variant until it reaches `y* + epsilon`.
pub fn trace(req: &Request) -> Result<TraceResponse, String> {
    let geom = req.geometry()?;
    let runner = req.runner(&geom, req.variant)?;
    let t = runner.run(req.seed, 0).map_err(|e| e.to_string())?;
    Ok(TraceResponse::from_trace(&t, runner.target()))
}

pub fn bounds(req: &Request) -> Result<BoundReport, String> {
    let geom = req.geometry()?;
    let params = BoundParams {
        gamma: req.gamma,
        alpha: req.alpha,
        q: req.q,
        epsilon: req.epsilon,
    };
    bound_report(&geom, params, true).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct DominanceResponse {
    pub label_a: String,
    pub label_b: String,
    pub y_grid: Vec<f64>,
    pub cdf_a: Vec<Vec<f64>>,
    pub cdf_b: Vec<Vec<f64>>,
    pub tolerance: f64,
    pub max_deficit: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Empirical CDFs of the best value for HASE against HAS1, or QASE against
/// HAS2, at iterations `0..=k_max`.
pub fn dominance(req: &Request) -> Result<DominanceResponse, String> {
    let reference = match req.variant {
        Variant::Hase => Variant::Has1,
        Variant::Qase => Variant::Has2,
        v => return Err(format!("dominance compares HASE or QASE, not {}", v.name())),
    };
    let geom = req.geometry()?;
    let population = |v: Variant, seed: u64| -> Result<Population, String> {
        let runner = req.runner(&geom, v)?;
        let traces = run_population(&runner, seed, req.runs).map_err(|e| e.to_string())?;
        Population::from_traces(v.name(), &traces, req.k_max).map_err(|e| e.to_string())
    };
    let a = population(req.variant, req.seed)?;
    let b = population(reference, req.seed.wrapping_add(1))?;
    let p = geom.problem();
    let grid = linear_grid(p.y_star + req.epsilon, p.y_max, req.grid_points);
    let r = check_dominance(&a, &b, req.k_max, &grid, 0.01).map_err(|e| e.to_string())?;
    Ok(DominanceResponse {
        label_a: r.label_a,
        label_b: r.label_b,
        y_grid: r.y_grid,
        cdf_a: r.cdf_a,
        cdf_b: r.cdf_b,
        tolerance: r.tolerance,
        max_deficit: r.max_deficit,
        violations: r.violations.len(),
        pass: r.pass,
    })
}

fn respond<T: Serialize>(
    json: &str,
    f: impl FnOnce(&Request) -> Result<T, String>,
) -> Result<String, String> {
    let req = Request::parse(json)?;
    let out = f(&req)?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

pub fn trace_json(request: &str) -> Result<String, String> {
    respond(request, trace)
}

pub fn bounds_json(request: &str) -> Result<String, String> {
    respond(request, bounds)
}

pub fn dominance_json(request: &str) -> Result<String, String> {
    respond(request, dominance)
}

#[wasm_bindgen(js_name = runTrace)]
pub fn run_trace(request: &str) -> Result<String, JsError> {
    trace_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = boundReport)]
pub fn bound_report_js(request: &str) -> Result<String, JsError> {
    bounds_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dominanceCurves)]
pub fn dominance_curves(request: &str) -> Result<String, JsError> {
    dominance_json(request).map_err(|e| JsError::new(&e))
}
