//! Two-level quantum mechanics for the Hamiltonian `H(J) = 4J σz + h σx`.
//!
//! Everything here is an immutable value type. Propagators use the closed
//! Rabi form, so no generic matrix exponential is involved.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Below this magnitude a Bloch-sphere amplitude is treated as a pole and
/// the azimuth is reported as zero.
pub const POLE_EPS: f64 = 1e-9;

/// Pure state `amp0 |0⟩ + amp1 |1⟩`, always normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    amp0: Complex64,
    amp1: Complex64,
}

impl QubitState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidInput(format!(
                "state amplitudes ({amp0}, {amp1}) cannot be normalized"
            )));
        }
        Ok(Self {
            amp0: amp0 / norm,
            amp1: amp1 / norm,
        })
    }

    /// `|0⟩`
    pub fn zero() -> Self {
        Self { amp0: ONE, amp1: ZERO }
    }

    /// `|1⟩`
    pub fn one() -> Self {
        Self { amp0: ZERO, amp1: ONE }
    }

    pub fn amp0(&self) -> Complex64 {
        self.amp0
    }

    pub fn amp1(&self) -> Complex64 {
        self.amp1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    /// Cartesian Bloch vector `(x, y, z)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let coherence = self.amp0.conj() * self.amp1;
        [
            2.0 * coherence.re,
            2.0 * coherence.im,
            self.amp0.norm_sqr() - self.amp1.norm_sqr(),
        ]
    }

    fn renormalized(amp0: Complex64, amp1: Complex64) -> Self {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        Self {
            amp0: amp0 / norm,
            amp1: amp1 / norm,
        }
    }
}

/// A 2×2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Unitary2) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self { m: out }
    }

    /// Raw matrix-vector product, without renormalization.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let id = Unitary2::identity();
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((p.m[r][c] - id.m[r][c]).norm());
            }
        }
        worst
    }
}

/// Transverse field and total evolution time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub h: f64,
    pub total_time: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { h: 1.0, total_time: TAU }
    }
}

impl PhysicsConfig {
    pub fn new(h: f64, total_time: f64) -> Result<Self> {
        let cfg = Self { h, total_time };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidConfig(format!("h must be positive, got {}", self.h)));
        }
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "total_time must be positive, got {}",
                self.total_time
            )));
        }
        Ok(())
    }

    /// Slice duration `T / N`.
    pub fn step_duration(&self, pieces: usize) -> f64 {
        self.total_time / pieces as f64
    }
}

/// `exp{-i (4J σz + h σx) dt}` in closed form.
///
/// With `Ω = sqrt((4J)² + h²)` the result is
/// `cos(Ω dt) I - i sin(Ω dt) (4J σz + h σx) / Ω`. `Ω ≥ h > 0`, so there is
/// no singular branch.
pub fn propagator(j: f64, dt: f64, cfg: &PhysicsConfig) -> Result<Unitary2> {
    if !j.is_finite() || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "propagator needs finite J and dt, got J={j}, dt={dt}"
        )));
    }
    if dt < 0.0 {
        return Err(Error::InvalidInput(format!("negative duration dt={dt}")));
    }
    Ok(propagator_unchecked(j, dt, cfg.h))
}

/// Hot-loop variant of [`propagator`]; callers guarantee finite inputs.
#[inline]
pub(crate) fn propagator_unchecked(j: f64, dt: f64, h: f64) -> Unitary2 {
    let z = 4.0 * j;
    let omega = z.hypot(h);
    let (s, c) = (omega * dt).sin_cos();
    let sz = s * z / omega;
    let sx = s * h / omega;
    Unitary2 {
        m: [
            [Complex64::new(c, -sz), Complex64::new(0.0, -sx)],
            [Complex64::new(0.0, -sx), Complex64::new(c, sz)],
        ],
    }
}

/// Applies `u` to `state` and renormalizes.
pub fn evolve(state: &QubitState, u: &Unitary2) -> QubitState {
    let [a0, a1] = u.apply([state.amp0, state.amp1]);
    QubitState::renormalized(a0, a1)
}

/// `|⟨a|b⟩|²`
pub fn fidelity(a: &QubitState, b: &QubitState) -> f64 {
    a.inner(b).norm_sqr().min(1.0)
}

/// Polar and azimuthal Bloch angles `(θ, φ)` with `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
pub fn bloch_angles(state: &QubitState) -> (f64, f64) {
    let c = state.amp0.norm().min(1.0);
    let s = state.amp1.norm().min(1.0);
    let theta = 2.0 * c.acos();
    if c < POLE_EPS || s < POLE_EPS {
        return (theta, 0.0);
    }
    let mut phi = (state.amp1.arg() - state.amp0.arg()).rem_euclid(TAU);
    if phi >= TAU {
        phi = 0.0;
    }
    (theta, phi)
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn state_from_angles(theta: f64, phi: f64) -> Result<QubitState> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta {theta} outside [0, π]")));
    }
    if !(0.0..TAU).contains(&phi) {
        return Err(Error::InvalidInput(format!("phi {phi} outside [0, 2π)")));
    }
    Ok(angles_unchecked(theta, phi))
}

pub(crate) fn angles_unchecked(theta: f64, phi: f64) -> QubitState {
    let (s, c) = (theta / 2.0).sin_cos();
    QubitState::renormalized(Complex64::new(c, 0.0), Complex64::from_polar(s, phi))
}

/// Equatorial state `(|0⟩ + e^{iφ}|1⟩)/√2`.
pub fn equator_target(phi: f64) -> QubitState {
    QubitState {
        amp0: Complex64::new(FRAC_1_SQRT_2, 0.0),
        amp1: Complex64::from_polar(FRAC_1_SQRT_2, phi),
    }
}
