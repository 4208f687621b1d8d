//! Piecewise-constant control sequences and the constraint families that
//! restrict them: a piece budget, amplitude bounds and a discrete level grid.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{fidelity, propagator_unchecked, PhysicsConfig, QubitState, Unitary2};

/// Admissible control space.
///
/// Unbounded sides are stored as infinities; `levels_minus_one` is the
/// number of grid intervals `M` when the field is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    #[serde(with = "bound_serde::lower", default = "neg_inf")]
    pub j_min: f64,
    #[serde(with = "bound_serde::upper", default = "pos_inf")]
    pub j_max: f64,
    pub levels_minus_one: Option<usize>,
    pub max_pieces: usize,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

impl ConstraintSpec {
    pub fn unbounded(max_pieces: usize) -> Self {
        Self {
            j_min: f64::NEG_INFINITY,
            j_max: f64::INFINITY,
            levels_minus_one: None,
            max_pieces,
        }
    }

    pub fn bounded(j_min: f64, j_max: f64, max_pieces: usize) -> Self {
        Self {
            j_min,
            j_max,
            levels_minus_one: None,
            max_pieces,
        }
    }

    pub fn discrete(j_min: f64, j_max: f64, levels_minus_one: usize, max_pieces: usize) -> Self {
        Self {
            j_min,
            j_max,
            levels_minus_one: Some(levels_minus_one),
            max_pieces,
        }
    }

    pub fn with_pieces(mut self, max_pieces: usize) -> Self {
        self.max_pieces = max_pieces;
        self
    }

    pub fn is_bounded(&self) -> bool {
        self.j_min.is_finite() || self.j_max.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_min.is_nan() || self.j_max.is_nan() {
            return Err(Error::InvalidConstraint("NaN bound".into()));
        }
        if self.j_min >= self.j_max {
            return Err(Error::InvalidConstraint(format!(
                "j_min {} must be below j_max {}",
                self.j_min, self.j_max
            )));
        }
        if self.max_pieces == 0 {
            return Err(Error::InvalidConstraint("max_pieces must be positive".into()));
        }
        if let Some(m) = self.levels_minus_one {
            if m == 0 {
                return Err(Error::InvalidConstraint("M must be at least 1".into()));
            }
            if !(self.j_min.is_finite() && self.j_max.is_finite()) {
                return Err(Error::InvalidConstraint(
                    "discrete levels require finite bounds".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Infinite bounds serialize as `null` so JSON and TOML records stay valid.
mod bound_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub mod lower {
        use super::*;
        pub use super::serialize;

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
        }
    }

    pub mod upper {
        use super::*;
        pub use super::serialize;

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
        }
    }
}

/// Field values `J_1..J_{i_f}`, each applied for `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ControlSequence {
    pub fn new(values: Vec<f64>, dt: f64) -> Self {
        Self { dt, values }
    }

    /// Number of pieces actually used (`i_f`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `step_index,J` rows, one per piece, indices starting at 1.
    pub fn to_profile_csv(&self) -> String {
        let mut out = String::from("step_index,J\n");
        for (i, j) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, j);
        }
        out
    }
}

/// States visited while applying a sequence, starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<(f64, QubitState)>,
}

impl Trajectory {
    /// `t,x,y,z` rows on the Bloch sphere.
    pub fn to_bloch_csv(&self) -> String {
        let mut out = String::from("t,x,y,z\n");
        for (t, s) in &self.points {
            let [x, y, z] = s.bloch_vector();
            let _ = writeln!(out, "{t},{x},{y},{z}");
        }
        out
    }
}

/// The `M + 1` uniformly spaced levels from `j_min` to `j_max`.
pub fn action_set(spec: &ConstraintSpec) -> Result<Vec<f64>> {
    let m = spec.levels_minus_one.ok_or_else(|| {
        Error::InvalidConstraint("action set needs a discrete level count".into())
    })?;
    uniform_grid(spec.j_min, spec.j_max, m)
}

/// `m + 1` points from `lo` to `hi` inclusive, endpoints exact.
pub fn uniform_grid(lo: f64, hi: f64, m: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidConstraint(format!(
            "grid needs finite bounds, got [{lo}, {hi}]"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidConstraint("M must be at least 1".into()));
    }
    let step = (hi - lo) / m as f64;
    Ok((0..=m)
        .map(|k| if k == m { hi } else { lo + k as f64 * step })
        .collect())
}

/// Projects `j` onto `[j_min, j_max]`.
pub fn clamp(j: f64, spec: &ConstraintSpec) -> f64 {
    j.max(spec.j_min).min(spec.j_max)
}

/// Nearest grid value, ties going to the larger one. `grid` must be ascending.
pub fn snap_value(j: f64, grid: &[f64]) -> f64 {
    let idx = grid.partition_point(|&g| g < j);
    if idx == 0 {
        return grid[0];
    }
    if idx == grid.len() {
        return grid[grid.len() - 1];
    }
    let (below, above) = (grid[idx - 1], grid[idx]);
    if above - j <= j - below {
        above
    } else {
        below
    }
}

pub fn snap_to_grid(seq: &ControlSequence, grid: &[f64]) -> ControlSequence {
    assert!(!grid.is_empty(), "snap_to_grid needs a nonempty grid");
    ControlSequence {
        dt: seq.dt,
        values: seq.values.iter().map(|&j| snap_value(j, grid)).collect(),
    }
}

/// Grid spanning the sequence's own min and max, used to discretize a
/// result that was optimized without bounds.
pub fn posthoc_grid(seq: &ControlSequence, m: usize) -> Result<Vec<f64>> {
    let lo = seq.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = seq.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return Err(Error::InvalidInput("empty sequence has no range".into()));
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    uniform_grid(lo, hi, m)
}

fn step_unitary(j: f64, dt: f64, cfg: &PhysicsConfig) -> Unitary2 {
    propagator_unchecked(j, dt, cfg.h)
}

pub fn evolve_sequence(
    psi0: &QubitState,
    seq: &ControlSequence,
    cfg: &PhysicsConfig,
) -> (QubitState, Trajectory) {
    let mut points = Vec::with_capacity(seq.len() + 1);
    points.push((0.0, *psi0));
    let mut psi = *psi0;
    for (i, &j) in seq.values.iter().enumerate() {
        psi = crate::qubit::evolve(&psi, &step_unitary(j, seq.dt, cfg));
        points.push(((i + 1) as f64 * seq.dt, psi));
    }
    (psi, Trajectory { points })
}

/// Final state only; no trajectory is kept.
pub fn final_state(psi0: &QubitState, values: &[f64], dt: f64, cfg: &PhysicsConfig) -> QubitState {
    values.iter().fold(*psi0, |psi, &j| {
        crate::qubit::evolve(&psi, &step_unitary(j, dt, cfg))
    })
}

pub fn sequence_fidelity(
    seq: &ControlSequence,
    psi0: &QubitState,
    target: &QubitState,
    cfg: &PhysicsConfig,
) -> f64 {
    fidelity(&final_state(psi0, &seq.values, seq.dt, cfg), target)
}
