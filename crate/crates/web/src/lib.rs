//! WebAssembly entry points for the browser demo.
//!
//! Every operation takes and returns a JSON string. The `*_json` functions
//! hold the logic and run natively; the exported wrappers only convert errors
//! into JavaScript exceptions.

use qsp_core::control::evolve_sequence;
use qsp_core::deep::{dql_run, DqlConfig};
use qsp_core::krotov::{krotov_run, KrotovConfig};
use qsp_core::noise::noise_eval;
use qsp_core::qubit::equator_target;
use qsp_core::sgd::{sgd_run, SgdConfig};
use qsp_core::tabular::{ql_run, QlConfig};
use qsp_core::{derive_seed, rng_from_seed, ConstraintSpec, ControlSequence, ProblemSpec, RunResult, Trajectory};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Longest sequence or budget the page may ask for; keeps a click interactive.
pub const MAX_PIECES: usize = 200;
pub const MAX_ITERS: usize = 20_000;
pub const MAX_REALIZATIONS: usize = 2_000;

fn problem(target_phi: Option<f64>) -> Result<ProblemSpec, String> {
    match target_phi {
        None => Ok(ProblemSpec::default()),
        Some(phi) if phi.is_finite() => Ok(ProblemSpec::default().with_target(equator_target(phi))),
        Some(_) => Err("target_phi must be finite".into()),
    }
}

fn sequence(values: Vec<f64>, p: &ProblemSpec) -> Result<ControlSequence, String> {
    if values.is_empty() || values.len() > MAX_PIECES {
        return Err(format!("need between 1 and {MAX_PIECES} control values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("control values must be finite".into());
    }
    let dt = p.physics.step_duration(values.len());
    Ok(ControlSequence::new(values, dt))
}

fn points(traj: &Trajectory) -> Vec<[f64; 4]> {
    traj.points
        .iter()
        .map(|(t, s)| {
            let [x, y, z] = s.bloch_vector();
            [*t, x, y, z]
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub values: Vec<f64>,
    #[serde(default)]
    pub target_phi: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SimulateResponse {
    pub fidelity: f64,
    pub dt: f64,
    /// `[t, x, y, z]` rows.
    pub trajectory: Vec<[f64; 4]>,
}

/// Applies the given field values, spread evenly over the total time.
pub fn simulate_json(request: &str) -> Result<String, String> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let p = problem(req.target_phi)?;
    let seq = sequence(req.values, &p)?;
    let (_, traj) = evolve_sequence(&p.initial, &seq, &p.physics);
    let resp = SimulateResponse { fidelity: p.fidelity_of(&seq), dt: seq.dt, trajectory: points(&traj) };
    Ok(serde_json::to_string(&resp).expect("response serializes"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRequest {
    pub algorithm: String,
    pub pieces: usize,
    #[serde(default)]
    pub j_min: Option<f64>,
    #[serde(default)]
    pub j_max: Option<f64>,
    /// `M + 1`; only the learning agents use it.
    #[serde(default)]
    pub levels: Option<usize>,
    pub iters: usize,
    pub seed: u64,
    #[serde(default)]
    pub target_phi: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct OptimizeResponse {
    pub best_fidelity: f64,
    pub i_f: usize,
    pub dt: f64,
    pub profile: Vec<f64>,
    /// Running best fidelity per iteration or episode.
    pub trace: Vec<f64>,
    pub trajectory: Vec<[f64; 4]>,
}

fn constraint(req: &OptimizeRequest, learning: bool) -> Result<ConstraintSpec, String> {
    if req.pieces == 0 || req.pieces > MAX_PIECES {
        return Err(format!("pieces must lie in 1..={MAX_PIECES}"));
    }
    let c = if learning {
        let lo = req.j_min.unwrap_or(0.0);
        let hi = req.j_max.unwrap_or(1.0);
        let m = req.levels.unwrap_or(2).checked_sub(1).filter(|m| *m >= 1).ok_or("levels must be at least 2")?;
        ConstraintSpec::discrete(lo, hi, m, req.pieces)
    } else {
        ConstraintSpec::bounded(req.j_min.unwrap_or(f64::NEG_INFINITY), req.j_max.unwrap_or(f64::INFINITY), req.pieces)
    };
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

/// Runs one optimizer with its default settings and the requested budget.
pub fn optimize_json(request: &str) -> Result<String, String> {
    let req: OptimizeRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.iters == 0 || req.iters > MAX_ITERS {
        return Err(format!("iters must lie in 1..={MAX_ITERS}"));
    }
    let p = problem(req.target_phi)?;
    let algorithm = req.algorithm.to_ascii_lowercase();
    let learning = matches!(algorithm.as_str(), "ql" | "dql");
    let c = constraint(&req, learning)?;
    let mut rng = rng_from_seed(req.seed);
    let run: RunResult = match algorithm.as_str() {
        "sgd" => sgd_run(&p, &c, &SgdConfig { n_iter: req.iters, ..Default::default() }, &mut rng, req.seed),
        "krotov" => krotov_run(&p, &c, &KrotovConfig { n_iter: req.iters, ..Default::default() }, &mut rng, req.seed),
        "ql" => ql_run(&p, &c, &QlConfig { n_iter: req.iters, ..Default::default() }, &mut rng, req.seed),
        "dql" => dql_run(&p, &c, &DqlConfig { n_iter: req.iters, ..Default::default() }, &mut rng, req.seed),
        other => return Err(format!("unknown algorithm '{other}'")),
    }
    .map_err(|e| e.to_string())?;
    let (_, traj) = evolve_sequence(&p.initial, &run.best_sequence, &p.physics);
    let resp = OptimizeResponse {
        best_fidelity: run.best_fidelity,
        i_f: run.i_f(),
        dt: run.best_sequence.dt,
        profile: run.best_sequence.values.clone(),
        trace: run.best_so_far(),
        trajectory: points(&traj),
    };
    Ok(serde_json::to_string(&resp).expect("response serializes"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRequest {
    pub values: Vec<f64>,
    /// Total duration is split evenly over this many pieces; defaults to the
    /// number of values. Shorter sequences than the budget keep the same `dt`.
    #[serde(default)]
    pub pieces: Option<usize>,
    pub noise_levels: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default)]
    pub target_phi: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct NoiseResponse {
    /// `[eps, mean fidelity]` rows.
    pub curve: Vec<[f64; 2]>,
}

/// Mean fidelity of a fixed sequence under uniform amplitude noise.
pub fn noise_curve_json(request: &str) -> Result<String, String> {
    let req: NoiseRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.realizations == 0 || req.realizations > MAX_REALIZATIONS {
        return Err(format!("realizations must lie in 1..={MAX_REALIZATIONS}"));
    }
    if req.noise_levels.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err("noise levels must be finite and non-negative".into());
    }
    let p = problem(req.target_phi)?;
    let budget = req.pieces.unwrap_or(req.values.len());
    if budget < req.values.len() || budget == 0 || budget > MAX_PIECES {
        return Err("pieces must cover the sequence and stay within the limit".into());
    }
    let mut seq = sequence(req.values, &p)?;
    seq.dt = p.physics.step_duration(budget);
    let curve = req
        .noise_levels
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let mut rng = rng_from_seed(derive_seed(req.seed, k as u64));
            [eps, noise_eval(&seq, eps, req.realizations, &p, &mut rng)]
        })
        .collect();
    Ok(serde_json::to_string(&NoiseResponse { curve }).expect("response serializes"))
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(request: &str) -> Result<String, JsValue> {
    js(simulate_json(request))
}

#[wasm_bindgen]
pub fn optimize(request: &str) -> Result<String, JsValue> {
    js(optimize_json(request))
}

#[wasm_bindgen]
pub fn noise_curve(request: &str) -> Result<String, JsValue> {
    js(noise_curve_json(request))
}
