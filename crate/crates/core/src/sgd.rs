//! Derivative-free stochastic gradient ascent.
//!
//! Each iteration probes the objective at `J ± α v` along one random unit
//! direction `v`, forms the central-difference slope `g` and moves `J` by
//! `β g v`. Bounds, when present, are enforced on the probes and on the update.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::control::{clamp, ConstraintSpec, ControlSequence};
use crate::error::{Error, Result};
use crate::problem::{Landscape, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub probe_step: f64,
    pub learn_rate: f64,
    pub n_iter: usize,
    pub init_low: f64,
    pub init_high: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            probe_step: 0.01,
            learn_rate: 0.0025,
            n_iter: 500,
            init_low: 0.0,
            init_high: 1.0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.probe_step > 0.0 && self.probe_step.is_finite()) {
            return Err(Error::InvalidConfig("sgd probe_step must be positive".into()));
        }
        if !(self.learn_rate > 0.0 && self.learn_rate.is_finite()) {
            return Err(Error::InvalidConfig("sgd learn_rate must be positive".into()));
        }
        if self.init_low.is_nan() || self.init_high.is_nan() || self.init_low > self.init_high {
            return Err(Error::InvalidConfig("sgd init range is empty".into()));
        }
        Ok(())
    }
}

/// Uniform direction on the unit sphere in `dim` dimensions.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// One update along a given direction. Returns the new vector and the slope `g`.
pub fn sgd_step_along<L: Landscape + ?Sized>(
    controls: &[f64],
    direction: &[f64],
    landscape: &L,
    constraint: &ConstraintSpec,
    cfg: &SgdConfig,
) -> (Vec<f64>, f64) {
    let alpha = cfg.probe_step;
    let probe = |sign: f64| -> Vec<f64> {
        controls
            .iter()
            .zip(direction)
            .map(|(&j, &v)| clamp(j + sign * alpha * v, constraint))
            .collect()
    };
    let slope = (landscape.evaluate(&probe(1.0)) - landscape.evaluate(&probe(-1.0))) / (2.0 * alpha);
    let next = controls
        .iter()
        .zip(direction)
        .map(|(&j, &v)| clamp(j + cfg.learn_rate * slope * v, constraint))
        .collect();
    (next, slope)
}

pub fn sgd_step<L: Landscape + ?Sized, R: Rng + ?Sized>(
    controls: &[f64],
    landscape: &L,
    constraint: &ConstraintSpec,
    cfg: &SgdConfig,
    rng: &mut R,
) -> Vec<f64> {
    let v = random_unit_vector(controls.len(), rng);
    sgd_step_along(controls, &v, landscape, constraint, cfg).0
}

/// Full run over exactly `constraint.max_pieces` slices.
pub fn sgd_run<L: Landscape + ?Sized, R: Rng + ?Sized>(
    landscape: &L,
    constraint: &ConstraintSpec,
    cfg: &SgdConfig,
    rng: &mut R,
    seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    constraint.validate()?;
    let n = constraint.max_pieces;
    let mut controls: Vec<f64> = (0..n)
        .map(|_| clamp(cfg.init_low + (cfg.init_high - cfg.init_low) * rng.random::<f64>(), constraint))
        .collect();

    let mut f = landscape.evaluate(&controls);
    let mut trace = Vec::with_capacity(cfg.n_iter + 1);
    trace.push(f);
    let mut best = (f, controls.clone());

    for _ in 0..cfg.n_iter {
        controls = sgd_step(&controls, landscape, constraint, cfg, rng);
        f = landscape.evaluate(&controls);
        trace.push(f);
        if f > best.0 {
            best = (f, controls.clone());
        }
    }

    Ok(RunResult {
        fidelity_trace: trace,
        best_fidelity: best.0,
        best_sequence: ControlSequence::new(best.1, landscape.step_duration(n)),
        greedy: None,
        iterations_used: cfg.n_iter,
        seed,
    })
}
