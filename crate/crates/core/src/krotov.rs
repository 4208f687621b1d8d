//! Krotov-type sequential updates driven by a back-propagated co-state.
//!
//! Forward states `ψ_i` and co-states `χ_i = U_{i+1}† ⋯ U_N† |φ⟩⟨φ|ψ_N⟩` are
//! paired at the end of slice `i`; the slice update is
//! `J_i ← J_i + λ Im⟨χ_i| 4σz |ψ_i⟩`, i.e. the fidelity gradient up to a
//! positive factor `2 dt`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::{clamp, ConstraintSpec, ControlSequence};
use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, RunResult};
use crate::qubit::{evolve, fidelity, propagator_unchecked, PhysicsConfig, QubitState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrotovConfig {
    pub update_scale: f64,
    pub n_iter: usize,
    pub init_low: f64,
    pub init_high: f64,
}

impl Default for KrotovConfig {
    fn default() -> Self {
        Self {
            update_scale: 0.3,
            n_iter: 500,
            init_low: 0.0,
            init_high: 1.0,
        }
    }
}

impl KrotovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.update_scale > 0.0 && self.update_scale.is_finite()) {
            return Err(Error::InvalidConfig("krotov update_scale must be positive".into()));
        }
        if self.init_low.is_nan() || self.init_high.is_nan() || self.init_low > self.init_high {
            return Err(Error::InvalidConfig("krotov init range is empty".into()));
        }
        Ok(())
    }
}

/// Unnormalized two-component vector; norm is at most one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoState(pub [Complex64; 2]);

impl CoState {
    pub fn zero() -> Self {
        CoState([Complex64::new(0.0, 0.0); 2])
    }

    pub fn norm(&self) -> f64 {
        (self.0[0].norm_sqr() + self.0[1].norm_sqr()).sqrt()
    }
}

/// `ψ_0 .. ψ_N` for the given controls.
pub fn forward_pass(controls: &[f64], psi0: &QubitState, dt: f64, cfg: &PhysicsConfig) -> Vec<QubitState> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*psi0);
    let mut psi = *psi0;
    for &j in controls {
        psi = evolve(&psi, &propagator_unchecked(j, dt, cfg.h));
        states.push(psi);
    }
    states
}

/// `|φ⟩⟨φ|ψ_N⟩`
pub fn costate_init(psi_n: &QubitState, target: &QubitState) -> CoState {
    let overlap = target.inner(psi_n);
    CoState([target.amp0() * overlap, target.amp1() * overlap])
}

/// `χ_0 .. χ_N` via `χ_{i-1} = U_i† χ_i`.
pub fn backward_pass(controls: &[f64], chi_n: CoState, dt: f64, cfg: &PhysicsConfig) -> Vec<CoState> {
    let n = controls.len();
    let mut chis = vec![CoState::zero(); n + 1];
    chis[n] = chi_n;
    for i in (1..=n).rev() {
        let u_dag = propagator_unchecked(controls[i - 1], dt, cfg.h).adjoint();
        chis[i - 1] = CoState(u_dag.apply(chis[i].0));
    }
    chis
}

/// `Im⟨χ| 4σz |ψ⟩`
pub fn update_term(chi: &CoState, psi: &QubitState) -> f64 {
    let v = chi.0[0].conj() * psi.amp0() - chi.0[1].conj() * psi.amp1();
    4.0 * v.im
}

/// One sequential sweep over all slices.
///
/// Slice `i` is propagated with its current value, updated from the pairing
/// with `chis[i]`, and then re-propagated with the updated value so that the
/// next slice starts from the state the new controls actually produce.
pub fn krotov_update_sweep(
    controls: &[f64],
    chis: &[CoState],
    psi0: &QubitState,
    constraint: &ConstraintSpec,
    dt: f64,
    physics: &PhysicsConfig,
    cfg: &KrotovConfig,
) -> (Vec<f64>, Vec<QubitState>) {
    debug_assert_eq!(chis.len(), controls.len() + 1);
    let mut next = controls.to_vec();
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*psi0);
    let mut prev = *psi0;
    for i in 1..=controls.len() {
        let trial = evolve(&prev, &propagator_unchecked(next[i - 1], dt, physics.h));
        let updated = clamp(
            next[i - 1] + cfg.update_scale * update_term(&chis[i], &trial),
            constraint,
        );
        let psi = if updated == next[i - 1] {
            trial
        } else {
            next[i - 1] = updated;
            evolve(&prev, &propagator_unchecked(updated, dt, physics.h))
        };
        states.push(psi);
        prev = psi;
    }
    (next, states)
}

pub fn krotov_run<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    constraint: &ConstraintSpec,
    cfg: &KrotovConfig,
    rng: &mut R,
    seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    constraint.validate()?;
    problem.validate()?;
    let n = constraint.max_pieces;
    let physics = &problem.physics;
    let dt = physics.step_duration(n);

    let mut controls: Vec<f64> = (0..n)
        .map(|_| clamp(cfg.init_low + (cfg.init_high - cfg.init_low) * rng.random::<f64>(), constraint))
        .collect();
    let states = forward_pass(&controls, &problem.initial, dt, physics);
    let mut f = fidelity(&states[n], &problem.target);
    let mut chis = backward_pass(&controls, costate_init(&states[n], &problem.target), dt, physics);

    let mut trace = Vec::with_capacity(cfg.n_iter + 1);
    trace.push(f);
    let mut best = (f, controls.clone());

    for _ in 0..cfg.n_iter {
        let (next, states) = krotov_update_sweep(&controls, &chis, &problem.initial, constraint, dt, physics, cfg);
        controls = next;
        f = fidelity(&states[n], &problem.target);
        trace.push(f);
        if f > best.0 {
            best = (f, controls.clone());
        }
        chis = backward_pass(&controls, costate_init(&states[n], &problem.target), dt, physics);
    }

    Ok(RunResult {
        fidelity_trace: trace,
        best_fidelity: best.0,
        best_sequence: ControlSequence::new(best.1, dt),
        greedy: None,
        iterations_used: cfg.n_iter,
        seed,
    })
}
