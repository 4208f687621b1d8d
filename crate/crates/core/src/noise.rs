//! Robustness of a fixed sequence against uniform control-amplitude noise.

use rand::Rng;

use crate::control::ControlSequence;
use crate::problem::ProblemSpec;

/// Mean fidelity over `realizations` perturbed copies `J_i + δJ_i`,
/// `δJ_i ~ U[-eps, eps]` drawn independently per piece. Perturbed values are
/// not clamped back into any bounds.
pub fn noise_eval<R: Rng + ?Sized>(
    seq: &ControlSequence,
    eps: f64,
    realizations: usize,
    problem: &ProblemSpec,
    rng: &mut R,
) -> f64 {
    if eps == 0.0 {
        return problem.fidelity_of(seq);
    }
    noise_samples(seq, eps, realizations, problem, rng).iter().sum::<f64>() / realizations as f64
}

/// Individual fidelities behind [`noise_eval`].
pub fn noise_samples<R: Rng + ?Sized>(
    seq: &ControlSequence,
    eps: f64,
    realizations: usize,
    problem: &ProblemSpec,
    rng: &mut R,
) -> Vec<f64> {
    assert!(eps >= 0.0, "noise level must be non-negative");
    assert!(realizations >= 1, "need at least one noise realization");
    if eps == 0.0 {
        return vec![problem.fidelity_of(seq); realizations];
    }
    let mut noisy = seq.clone();
    (0..realizations)
        .map(|_| {
            for (n, &j) in noisy.values.iter_mut().zip(&seq.values) {
                *n = j + rng.random_range(-eps..=eps);
            }
            problem.fidelity_of(&noisy)
        })
        .collect()
}
