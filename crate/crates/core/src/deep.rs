//! Deep Q-learning with experience replay and a periodically synced target
//! network.
//!
//! States are fed to the network as the four real components of the
//! amplitudes. One environment step counter runs across episodes; every
//! `learn_every` steps a minibatch is replayed through the evaluation
//! network, and every `sync_every` learning calls the target network is
//! refreshed from it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::ConstraintSpec;
use crate::dense::DenseNet;
use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, RunResult};
use crate::qubit::{fidelity, QubitState};
use crate::tabular::{argmax, epsilon_greedy, finish_episodes, greedy_rollout, Environment, RewardSchedule};

/// `[Re⟨0|ψ⟩, Im⟨0|ψ⟩, Re⟨1|ψ⟩, Im⟨1|ψ⟩]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodedState(pub [f64; 4]);

pub fn encode(state: &QubitState) -> EncodedState {
    let (a, b) = (state.amp0(), state.amp1());
    EncodedState([a.re, a.im, b.re, b.im])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub prev_state: EncodedState,
    pub action: usize,
    pub reward: f64,
    pub next_state: EncodedState,
    pub terminal: bool,
}

/// Fixed-capacity ring buffer; the oldest entry is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    buf: Vec<Experience>,
    capacity: usize,
    cursor: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay memory needs positive capacity");
        Self {
            buf: Vec::with_capacity(capacity),
            capacity,
            cursor: 0,
        }
    }

    pub fn remember(&mut self, e: Experience) {
        if self.buf.len() < self.capacity {
            self.buf.push(e);
        } else {
            self.buf[self.cursor] = e;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.buf.iter()
    }

    /// Uniform draw with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Experience {
        &self.buf[rng.random_range(0..self.buf.len())]
    }
}

pub fn remember(mem: &mut ReplayMemory, e: Experience) {
    mem.remember(e);
}

/// `r` on terminal transitions, otherwise `r + γ max_a' Q⁻(s', a')`.
pub fn td_target(e: &Experience, target_net: &DenseNet, discount: f64) -> Result<f64> {
    if e.terminal || discount == 0.0 {
        return Ok(e.reward);
    }
    let q = target_net.forward(&e.next_state.0)?;
    Ok(e.reward + discount * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqlConfig {
    pub discount: f64,
    pub explore: f64,
    pub learn_rate: f64,
    pub batch_size: usize,
    pub memory_capacity: usize,
    pub learn_every: usize,
    pub sync_every: usize,
    pub n_iter: usize,
    pub success_threshold: f64,
    pub hidden_layout: Vec<usize>,
    /// Multiplies every reward before it is stored.
    pub reward_scale: f64,
}

impl Default for DqlConfig {
    fn default() -> Self {
        Self {
            discount: 0.9,
            explore: 0.1,
            learn_rate: 1e-2,
            batch_size: 32,
            memory_capacity: 2000,
            learn_every: 5,
            sync_every: 50,
            n_iter: 500,
            success_threshold: 1e-3,
            hidden_layout: vec![32, 32],
            reward_scale: 1e-3,
        }
    }
}

impl DqlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidConfig("dql discount must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.explore) {
            return Err(Error::InvalidConfig("dql explore must lie in [0, 1]".into()));
        }
        if !(self.learn_rate >= 0.0 && self.learn_rate.is_finite()) {
            return Err(Error::InvalidConfig("dql learn_rate must be non-negative".into()));
        }
        if self.batch_size == 0 || self.memory_capacity == 0 || self.learn_every == 0 || self.sync_every == 0 {
            return Err(Error::InvalidConfig(
                "dql batch_size, memory_capacity, learn_every and sync_every must be positive".into(),
            ));
        }
        if self.hidden_layout.contains(&0) {
            return Err(Error::InvalidConfig("dql hidden layers must be nonempty".into()));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::InvalidConfig("dql reward_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Networks and memory of one agent.
#[derive(Debug, Clone)]
pub struct DqlAgent {
    pub eval_net: DenseNet,
    pub target_net: DenseNet,
    pub memory: ReplayMemory,
    pub learn_calls: usize,
    pub syncs: usize,
}

impl DqlAgent {
    pub fn new<R: Rng + ?Sized>(actions: usize, cfg: &DqlConfig, rng: &mut R) -> Result<Self> {
        let mut sizes = vec![4];
        sizes.extend(&cfg.hidden_layout);
        sizes.push(actions);
        let eval_net = DenseNet::new(&sizes, rng)?;
        Ok(Self {
            target_net: eval_net.clone(),
            eval_net,
            memory: ReplayMemory::new(cfg.memory_capacity),
            learn_calls: 0,
            syncs: 0,
        })
    }

    pub fn q_values(&self, s: &EncodedState) -> Vec<f64> {
        self.eval_net.forward(&s.0).expect("agent network takes four inputs")
    }

    /// One replay call: `batch_size` sampled experiences, one step each.
    pub fn learn<R: Rng + ?Sized>(&mut self, cfg: &DqlConfig, rng: &mut R) -> Result<()> {
        for _ in 0..cfg.batch_size {
            let e = *self.memory.sample(rng);
            let y = td_target(&e, &self.target_net, cfg.discount)?;
            self.eval_net.train_step(&e.prev_state.0, e.action, y, cfg.learn_rate)?;
        }
        self.learn_calls += 1;
        if self.learn_calls.is_multiple_of(cfg.sync_every) {
            self.target_net = self.eval_net.clone();
            self.syncs += 1;
        }
        Ok(())
    }
}

pub fn dql_run<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    constraint: &ConstraintSpec,
    cfg: &DqlConfig,
    rng: &mut R,
    seed: u64,
) -> Result<RunResult> {
    dql_train(problem, constraint, cfg, rng, seed).map(|(r, _)| r)
}

/// Same as [`dql_run`] but also returns the trained agent.
pub fn dql_train<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    constraint: &ConstraintSpec,
    cfg: &DqlConfig,
    rng: &mut R,
    seed: u64,
) -> Result<(RunResult, DqlAgent)> {
    cfg.validate()?;
    let env = Environment::new(problem, constraint)?;
    let schedule = RewardSchedule::default();
    let mut agent = DqlAgent::new(env.actions.len(), cfg, rng)?;

    let mut steps = 0usize;
    let mut trace = Vec::with_capacity(cfg.n_iter);
    let mut best: Option<(Vec<f64>, f64)> = None;

    for _ in 0..cfg.n_iter {
        let mut psi = problem.initial;
        let mut s = encode(&psi);
        let mut f = fidelity(&psi, &problem.target);
        let mut actions = Vec::with_capacity(env.max_pieces);
        for _ in 0..env.max_pieces {
            let a = epsilon_greedy(&agent.q_values(&s), cfg.explore, rng);
            let (next, f_next) = env.step(&psi, a);
            let s_next = encode(&next);
            let done = 1.0 - f_next < cfg.success_threshold;
            agent.memory.remember(Experience {
                prev_state: s,
                action: a,
                reward: schedule.reward(f_next) * cfg.reward_scale,
                next_state: s_next,
                terminal: done,
            });
            actions.push(env.actions[a]);
            steps += 1;
            if steps.is_multiple_of(cfg.learn_every) && agent.memory.len() >= cfg.batch_size {
                agent.learn(cfg, rng)?;
            }
            psi = next;
            s = s_next;
            f = f_next;
            if done {
                break;
            }
        }
        trace.push(f);
        if best.as_ref().is_none_or(|b| f > b.1) {
            best = Some((actions, f));
        }
    }

    let greedy = greedy_rollout(&env, cfg.success_threshold, |psi| argmax(&agent.q_values(&encode(psi))));
    Ok((finish_episodes(trace, best, greedy, env.dt, cfg.n_iter, seed), agent))
}
