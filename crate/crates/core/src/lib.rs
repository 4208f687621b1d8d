//! Benchmarkable optimizers for preparing a target state of one qubit with a
//! piecewise-constant control field.
//!
//! The crate is organized bottom-up:
//!
//! * [`qubit`]: states, closed-form propagators, fidelity, Bloch angles.
//! * [`control`]: control sequences, bounds, discrete level grids, evolution.
//! * [`sgd`], [`krotov`]: iterative optimizers over a fixed number of slices.
//! * [`tabular`], [`deep`]: Q-learning agents that may stop early.
//! * [`dense`]: the small network used by the deep agent.
//! * [`noise`]: robustness of a sequence against amplitude noise.

pub mod control;
pub mod deep;
pub mod dense;
pub mod error;
pub mod krotov;
pub mod noise;
pub mod problem;
pub mod qubit;
pub mod sgd;
pub mod tabular;

pub use control::{ConstraintSpec, ControlSequence, Trajectory};
pub use error::{Error, Result};
pub use problem::{derive_seed, rng_from_seed, GreedyRollout, Landscape, ProblemSpec, RunResult, RunRng};
pub use qubit::{PhysicsConfig, QubitState, Unitary2};
