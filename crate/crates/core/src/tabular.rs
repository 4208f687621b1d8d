//! Tabular Q-learning over a 30 × 60 grid of Bloch-sphere states.
//!
//! The physical state evolves continuously; the grid only indexes the table.
//! Episodes stop as soon as the fidelity is within `success_threshold` of one,
//! which is what lets the agent return sequences shorter than the piece budget.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::{action_set, ConstraintSpec, ControlSequence};
use crate::error::{Error, Result};
use crate::problem::{GreedyRollout, ProblemSpec, RunResult};
use crate::qubit::{angles_unchecked, evolve, fidelity, propagator_unchecked, QubitState, Unitary2};

pub const THETA_COUNT: usize = 30;
pub const PHI_COUNT: usize = 60;

/// Nodes `θ = kπ/30, k < 30` × `φ = kπ/30, k < 60`, flat index `kθ·60 + kφ`.
#[derive(Debug, Clone)]
pub struct StateGrid {
    nodes: Vec<QubitState>,
}

impl Default for StateGrid {
    fn default() -> Self {
        Self::new()
    }
}

impl StateGrid {
    pub fn new() -> Self {
        let step = PI / THETA_COUNT as f64;
        let nodes = (0..THETA_COUNT)
            .flat_map(|kt| (0..PHI_COUNT).map(move |kp| angles_unchecked(kt as f64 * step, kp as f64 * step)))
            .collect();
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, index: usize) -> &QubitState {
        &self.nodes[index]
    }

    pub fn flat_index(theta_k: usize, phi_k: usize) -> usize {
        theta_k * PHI_COUNT + phi_k
    }

    pub fn coords(index: usize) -> (usize, usize) {
        (index / PHI_COUNT, index % PHI_COUNT)
    }
}

/// Fidelities closer than this count as a tie in [`discretize`].
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the node with the highest fidelity to `state`; lowest index on ties.
pub fn discretize(state: &QubitState, grid: &StateGrid) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, node) in grid.nodes.iter().enumerate() {
        let f = fidelity(state, node);
        if f > best.1 + TIE_TOLERANCE {
            best = (k, f);
        }
    }
    best.0
}

/// Dense `states × actions` action-value table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Self {
        Self {
            actions,
            values: vec![0.0; states * actions],
        }
    }

    pub fn states(&self) -> usize {
        self.values.len() / self.actions
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.actions + a] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `flat_index,action_index,value` rows for every nonzero entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("flat_index,action_index,value\n");
        for s in 0..self.states() {
            for (a, v) in self.row(s).iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "{s},{a},{v}");
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTier {
    pub lower: f64,
    pub inclusive: bool,
    pub value: f64,
}

/// Tiered reward on the post-action fidelity; zero below the lowest tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSchedule {
    /// Highest threshold first.
    pub tiers: Vec<RewardTier>,
}

impl Default for RewardSchedule {
    fn default() -> Self {
        Self {
            tiers: vec![
                RewardTier { lower: 0.999, inclusive: true, value: 5000.0 },
                RewardTier { lower: 0.9, inclusive: false, value: 100.0 },
                RewardTier { lower: 0.5, inclusive: false, value: 10.0 },
            ],
        }
    }
}

impl RewardSchedule {
    pub fn reward(&self, f: f64) -> f64 {
        self.tiers
            .iter()
            .find(|t| if t.inclusive { f >= t.lower } else { f > t.lower })
            .map_or(0.0, |t| t.value)
    }
}

pub fn reward(f: f64, schedule: &RewardSchedule) -> f64 {
    schedule.reward(f)
}

/// First index of the maximum.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = k;
        }
    }
    best
}

pub fn epsilon_greedy<R: Rng + ?Sized>(row: &[f64], eps: f64, rng: &mut R) -> usize {
    assert!(!row.is_empty(), "epsilon_greedy needs at least one action");
    if rng.random::<f64>() < eps {
        rng.random_range(0..row.len())
    } else {
        argmax(row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QlConfig {
    pub learn_rate: f64,
    pub discount: f64,
    pub explore: f64,
    pub n_iter: usize,
    pub success_threshold: f64,
    /// Replace the physical state by its grid node after every step.
    pub snap_dynamics: bool,
}

impl Default for QlConfig {
    fn default() -> Self {
        Self {
            learn_rate: 0.1,
            discount: 0.95,
            explore: 0.1,
            n_iter: 500,
            success_threshold: 1e-3,
            snap_dynamics: false,
        }
    }
}

impl QlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learn_rate > 0.0 && self.learn_rate <= 1.0) {
            return Err(Error::InvalidConfig("ql learn_rate must lie in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidConfig("ql discount must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.explore) {
            return Err(Error::InvalidConfig("ql explore must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// `Q(s,a) ← Q(s,a) + α [r + γ max_a' Q(s',a') − Q(s,a)]`
pub fn q_update(table: &mut QTable, s_prev: usize, a: usize, r: f64, s_next: usize, cfg: &QlConfig) {
    let next_best = table.row(s_next).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q = table.get(s_prev, a);
    table.set(s_prev, a, q + cfg.learn_rate * (r + cfg.discount * next_best - q));
}

struct Episode {
    actions: Vec<f64>,
    fidelity: f64,
}

/// Shared environment for both learning agents: precomputed action unitaries.
pub(crate) struct Environment<'a> {
    pub problem: &'a ProblemSpec,
    pub actions: Vec<f64>,
    pub unitaries: Vec<Unitary2>,
    pub dt: f64,
    pub max_pieces: usize,
}

impl<'a> Environment<'a> {
    pub fn new(problem: &'a ProblemSpec, constraint: &ConstraintSpec) -> Result<Self> {
        problem.validate()?;
        constraint.validate()?;
        let actions = action_set(constraint)?;
        let dt = problem.physics.step_duration(constraint.max_pieces);
        let unitaries = actions
            .iter()
            .map(|&j| propagator_unchecked(j, dt, problem.physics.h))
            .collect();
        Ok(Self {
            problem,
            actions,
            unitaries,
            dt,
            max_pieces: constraint.max_pieces,
        })
    }

    pub fn step(&self, psi: &QubitState, action: usize) -> (QubitState, f64) {
        let next = evolve(psi, &self.unitaries[action]);
        let f = fidelity(&next, &self.problem.target);
        (next, f)
    }
}

pub fn ql_run<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    constraint: &ConstraintSpec,
    cfg: &QlConfig,
    rng: &mut R,
    seed: u64,
) -> Result<RunResult> {
    let (result, _) = ql_train(problem, constraint, cfg, rng, seed)?;
    Ok(result)
}

/// Same as [`ql_run`] but also hands back the trained table.
pub fn ql_train<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    constraint: &ConstraintSpec,
    cfg: &QlConfig,
    rng: &mut R,
    seed: u64,
) -> Result<(RunResult, QTable)> {
    cfg.validate()?;
    let env = Environment::new(problem, constraint)?;
    let grid = StateGrid::new();
    let schedule = RewardSchedule::default();
    let mut table = QTable::new(grid.len(), env.actions.len());
    let start = discretize(&problem.initial, &grid);

    let mut trace = Vec::with_capacity(cfg.n_iter);
    let mut best: Option<Episode> = None;

    for _ in 0..cfg.n_iter {
        let mut psi = problem.initial;
        let mut s = start;
        let mut actions = Vec::with_capacity(env.max_pieces);
        let mut f = fidelity(&psi, &problem.target);
        for _ in 0..env.max_pieces {
            let a = epsilon_greedy(table.row(s), cfg.explore, rng);
            let (next, f_next) = env.step(&psi, a);
            let s_next = discretize(&next, &grid);
            q_update(&mut table, s, a, schedule.reward(f_next), s_next, cfg);
            actions.push(env.actions[a]);
            psi = if cfg.snap_dynamics { *grid.node(s_next) } else { next };
            f = f_next;
            s = s_next;
            if 1.0 - f_next < cfg.success_threshold {
                break;
            }
        }
        if cfg.snap_dynamics {
            // report what the chosen controls achieve under the true dynamics
            f = problem.fidelity_of(&ControlSequence::new(actions.clone(), env.dt));
        }
        trace.push(f);
        if best.as_ref().is_none_or(|b| f > b.fidelity) {
            best = Some(Episode { actions, fidelity: f });
        }
    }

    let greedy = greedy_rollout(&env, cfg.success_threshold, |psi| {
        let s = discretize(psi, &grid);
        argmax(table.row(s))
    });
    Ok((finish(trace, best, greedy, env.dt, cfg.n_iter, seed), table))
}

/// ε = 0 episode under `policy`, breaking on success like training does.
pub(crate) fn greedy_rollout<F: FnMut(&QubitState) -> usize>(
    env: &Environment<'_>,
    success_threshold: f64,
    mut policy: F,
) -> GreedyRollout {
    let mut psi = env.problem.initial;
    let mut values = Vec::with_capacity(env.max_pieces);
    let mut f = fidelity(&psi, &env.problem.target);
    for _ in 0..env.max_pieces {
        let a = policy(&psi);
        let (next, f_next) = env.step(&psi, a);
        values.push(env.actions[a]);
        psi = next;
        f = f_next;
        if 1.0 - f < success_threshold {
            break;
        }
    }
    GreedyRollout {
        sequence: ControlSequence::new(values, env.dt),
        fidelity: f,
    }
}

fn finish(
    trace: Vec<f64>,
    best: Option<Episode>,
    greedy: GreedyRollout,
    dt: f64,
    iterations: usize,
    seed: u64,
) -> RunResult {
    let (best_fidelity, best_sequence) = match best {
        Some(ep) if ep.fidelity > greedy.fidelity => (ep.fidelity, ControlSequence::new(ep.actions, dt)),
        _ => (greedy.fidelity, greedy.sequence.clone()),
    };
    RunResult {
        fidelity_trace: trace,
        best_fidelity,
        best_sequence,
        greedy: Some(greedy),
        iterations_used: iterations,
        seed,
    }
}

pub(crate) fn finish_episodes(
    trace: Vec<f64>,
    best: Option<(Vec<f64>, f64)>,
    greedy: GreedyRollout,
    dt: f64,
    iterations: usize,
    seed: u64,
) -> RunResult {
    let best = best.map(|(actions, fidelity)| Episode { actions, fidelity });
    finish(trace, best, greedy, dt, iterations, seed)
}
