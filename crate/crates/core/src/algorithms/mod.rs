//! The search engines. HAS, its constant-bettering references HAS1/HAS2 and
//! HAS-E share one loop; QAS-E replaces the level-set draw with the quantile
//! mixture over the whole domain.
//!
//! Every run draws points and bettering coins from lane 0 of its stream and
//! replication noise from lane 1, so a noiseless HAS-E run consumes exactly
//! the same random numbers as the matching HAS run.

mod config;
mod trace;

pub use config::{
    resolve_schedule, theorem_replications, AlgorithmConfig, Bettering, ReplicationSchedule,
    ResolvedSchedule, StopRule, Variant,
};
pub use trace::{
    first_hitting, FirstHit, IterationRecord, TerminalStatus, Trace, TraceHeader, CSV_COLUMNS,
};

use crate::error::{Error, Result};
use crate::estimation::{estimate_at, Estimate, EstimateConfig};
use crate::geometry::LevelSetGeometry;
use crate::problem::BenchmarkProblem;
use crate::rng::RandomStream;
use crate::samplers::{sample_level_set, sample_quantile_mixture, sample_uniform};

/// A validated problem/configuration pair ready to produce traces.
#[derive(Clone, Debug)]
pub struct Runner {
    problem: BenchmarkProblem,
    geom: LevelSetGeometry,
    config: AlgorithmConfig,
    schedule: ResolvedSchedule,
    est: Option<EstimateConfig>,
    delta_min: f64,
}

impl Runner {
    pub fn new(geom: &LevelSetGeometry, config: &AlgorithmConfig) -> Result<Self> {
        let problem = geom.problem().clone();
        config.validate(&problem)?;
        let (schedule, est) = if config.variant.estimates() {
            (
                resolve_schedule(config, geom)?,
                Some(config.estimate_config(&problem)?),
            )
        } else {
            (ResolvedSchedule::noiseless(), None)
        };
        let delta_min = 0.5 * geom.quantile(config.target(&problem));
        Ok(Self {
            problem,
            geom: geom.clone(),
            config: config.clone(),
            schedule,
            est,
            delta_min,
        })
    }

    pub fn problem(&self) -> &BenchmarkProblem {
        &self.problem
    }

    pub fn geometry(&self) -> &LevelSetGeometry {
        &self.geom
    }

    pub fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    pub fn schedule(&self) -> &ResolvedSchedule {
        &self.schedule
    }

    pub fn target(&self) -> f64 {
        self.config.target(&self.problem)
    }

    /// Lower clamp on the QAS-E quantile parameter.
    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }

    /// One transition from a state whose best point has true value
    /// `best_true`, as if it had been sampled at iteration `k`. The attached
    /// upper confidence value is drawn afresh. Returns the next
    /// `(Ybar, ybar^high)`.
    pub fn step_from(
        &self,
        best_true: f64,
        k: usize,
        seed: u64,
        stream_id: u64,
    ) -> Result<(f64, f64)> {
        let stream = RandomStream::new(seed, stream_id);
        let mut state = RunState {
            runner: self,
            sampling: stream.lane(0),
            noise: stream.lane(1),
            records: Vec::new(),
        };
        let (est, _) = state.evaluate(best_true, k)?;
        let best_high = est.map_or(best_true, |e| e.upper);
        let draw = match self.config.variant {
            Variant::Qase => state.qase_draw(best_high, k)?,
            _ => state.has_draw(best_high, &(Vec::new(), best_true), k)?,
        };
        if draw.y < best_true {
            Ok((draw.y, draw.estimate.map_or(draw.y, |e| e.upper)))
        } else {
            Ok((best_true, best_high))
        }
    }

    pub fn run(&self, seed: u64, stream_id: u64) -> Result<Trace> {
        let stream = RandomStream::new(seed, stream_id);
        let mut state = RunState {
            runner: self,
            sampling: stream.lane(0),
            noise: stream.lane(1),
            records: Vec::new(),
        };
        let status = state.execute()?;
        Ok(Trace {
            config: self.config.clone(),
            problem: self.problem.clone(),
            seed,
            stream_id,
            replications: if self.config.variant.estimates() {
                self.schedule.constant()
            } else {
                None
            },
            records: state.records,
            status,
        })
    }
}

struct RunState<'a> {
    runner: &'a Runner,
    sampling: RandomStream,
    noise: RandomStream,
    records: Vec<IterationRecord>,
}

/// Outcome of generating one candidate.
struct Draw {
    x: Vec<f64>,
    y: f64,
    estimate: Option<Estimate>,
    replications: u64,
    bettered: bool,
    delta: Option<f64>,
}

impl RunState<'_> {
    fn evaluate(&mut self, y: f64, k: usize) -> Result<(Option<Estimate>, u64)> {
        let r = self.runner;
        match &r.est {
            Some(est) => {
                let reps = r.schedule.at(k);
                let e = estimate_at(
                    &r.problem,
                    y,
                    reps,
                    est,
                    r.config.estimator,
                    &mut self.noise,
                )?;
                Ok((Some(e), reps))
            }
            None => Ok((None, 1)),
        }
    }

    fn execute(&mut self) -> Result<TerminalStatus> {
        let r = self.runner;
        let p = &r.problem;
        let cfg = &r.config;
        let target = r.target();

        // Step 0
        let (x0, delta0) = if cfg.variant == Variant::Qase {
            let s = sample_quantile_mixture(
                p,
                &r.geom,
                1.0,
                cfg.effective_mix_weight(),
                &mut self.sampling,
                &cfg.sampler,
            )?;
            (s.x, Some(1.0))
        } else {
            (sample_uniform(&p.domain, &mut self.sampling), None)
        };
        let y0 = p.objective.value(&x0);
        let (est0, reps0) = self.evaluate(y0, 0)?;
        let mut best_true = y0;
        let mut best_high = est0.map_or(y0, |e| e.upper);
        let mut current = (x0.clone(), y0);
        self.records.push(IterationRecord {
            k: 0,
            x: x0,
            y_true: y0,
            y_est: est0.map(|e| e.mean),
            y_high: est0.map(|e| e.upper),
            best_true,
            best_high,
            replications_used: reps0,
            bettered: true,
            delta: delta0,
        });

        let mut k = 0;
        loop {
            if self.stop_met(best_true, best_high, target) {
                return Ok(TerminalStatus::TargetReached);
            }
            if self.records.len() >= cfg.max_iterations {
                return Ok(TerminalStatus::MaxIterations);
            }
            let draw = match cfg.variant {
                Variant::Qase => self.qase_draw(best_high, k)?,
                _ => self.has_draw(best_high, &current, k)?,
            };
            if draw.bettered || cfg.variant == Variant::Qase {
                current = (draw.x.clone(), draw.y);
            }
            if draw.y < best_true {
                best_true = draw.y;
                best_high = draw.estimate.map_or(draw.y, |e| e.upper);
            }
            k += 1;
            self.records.push(IterationRecord {
                k,
                x: draw.x,
                y_true: draw.y,
                y_est: draw.estimate.map(|e| e.mean),
                y_high: draw.estimate.map(|e| e.upper),
                best_true,
                best_high,
                replications_used: draw.replications,
                bettered: draw.bettered,
                delta: draw.delta,
            });
        }
    }

    fn stop_met(&self, best_true: f64, best_high: f64, target: f64) -> bool {
        match self.runner.config.stop {
            StopRule::TrueTarget => best_true <= target,
            StopRule::EstimatedTarget => best_high <= target,
            StopRule::Never => false,
        }
    }

    /// One HAS / HAS-E step: better with probability `b(threshold)` by
    /// sampling the level set below `threshold`, otherwise hesitate.
    /// `threshold` is `Ybar_k` for the noiseless variants and
    /// `ybar_k^high` for HAS-E (they coincide when there is no noise).
    fn has_draw(&mut self, threshold: f64, current: &(Vec<f64>, f64), k: usize) -> Result<Draw> {
        let r = self.runner;
        let p = &r.problem;
        let b = r
            .config
            .effective_bettering()
            .probability(threshold, p.y_star, p.y_max);
        let coin = self.sampling.bernoulli(b);
        // An empty improving set can only be hesitated on.
        if coin && threshold > p.y_star {
            let s = sample_level_set(
                p,
                threshold.min(p.y_max),
                &mut self.sampling,
                &r.config.sampler,
            )?;
            let (estimate, replications) = self.evaluate(s.value, k)?;
            Ok(Draw {
                x: s.x,
                y: s.value,
                estimate,
                replications,
                bettered: true,
                delta: None,
            })
        } else {
            Ok(Draw {
                x: current.0.clone(),
                y: current.1,
                estimate: None,
                replications: 0,
                bettered: false,
                delta: None,
            })
        }
    }

    fn qase_draw(&mut self, best_high: f64, k: usize) -> Result<Draw> {
        let r = self.runner;
        let delta = r.geom.quantile(best_high).clamp(r.delta_min, 1.0);
        let s = sample_quantile_mixture(
            &r.problem,
            &r.geom,
            delta,
            r.config.effective_mix_weight(),
            &mut self.sampling,
            &r.config.sampler,
        )?;
        let (estimate, replications) = self.evaluate(s.value, k)?;
        Ok(Draw {
            x: s.x,
            y: s.value,
            estimate,
            replications,
            bettered: s.focused,
            delta: Some(delta),
        })
    }
}

fn require(config: &AlgorithmConfig, allowed: &[Variant], op: &str) -> Result<()> {
    if allowed.contains(&config.variant) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{op} does not run variant {}",
            config.variant.name()
        )))
    }
}

/// Noiseless HAS with bettering probability `b(Ybar_k)`.
pub fn run_has(
    geom: &LevelSetGeometry,
    config: &AlgorithmConfig,
    seed: u64,
    stream_id: u64,
) -> Result<Trace> {
    require(config, &[Variant::Has], "run_has")?;
    Runner::new(geom, config)?.run(seed, stream_id)
}

/// HAS1 / HAS2: uniform sampling with constant bettering `gamma (1 - alpha) q`.
pub fn run_has_reference(
    geom: &LevelSetGeometry,
    config: &AlgorithmConfig,
    seed: u64,
    stream_id: u64,
) -> Result<Trace> {
    require(config, &[Variant::Has1, Variant::Has2], "run_has_reference")?;
    Runner::new(geom, config)?.run(seed, stream_id)
}

pub fn run_hase(
    geom: &LevelSetGeometry,
    config: &AlgorithmConfig,
    seed: u64,
    stream_id: u64,
) -> Result<Trace> {
    require(config, &[Variant::Hase], "run_hase")?;
    Runner::new(geom, config)?.run(seed, stream_id)
}

pub fn run_qase(
    geom: &LevelSetGeometry,
    config: &AlgorithmConfig,
    seed: u64,
    stream_id: u64,
) -> Result<Trace> {
    require(config, &[Variant::Qase], "run_qase")?;
    Runner::new(geom, config)?.run(seed, stream_id)
}
