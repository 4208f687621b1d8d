use std::fmt;
use std::str::FromStr;

use qsp_core::deep::dql_run;
use qsp_core::krotov::krotov_run;
use qsp_core::sgd::sgd_run;
use qsp_core::tabular::ql_run;
use qsp_core::{derive_seed, rng_from_seed, ConstraintSpec, ProblemSpec, RunResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sgd,
    Krotov,
    Ql,
    Dql,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Sgd, Algorithm::Krotov, Algorithm::Ql, Algorithm::Dql];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::Krotov => "krotov",
            Algorithm::Ql => "ql",
            Algorithm::Dql => "dql",
        }
    }

    pub fn is_learning(self) -> bool {
        matches!(self, Algorithm::Ql | Algorithm::Dql)
    }

    /// Fidelity after `iters` iterations, read from the run's trace.
    ///
    /// Gradient traces start with the initial guess; learning traces hold one
    /// entry per episode.
    pub fn best_after(self, run: &RunResult, iters: usize) -> f64 {
        let idx = if self.is_learning() { iters.saturating_sub(1) } else { iters };
        let best = run.best_so_far();
        best[idx.min(best.len() - 1)]
    }

    /// Constraint used when no bound is under study: the learners act on
    /// `{0, 1}`, the gradient methods are unrestricted.
    pub fn default_constraint(self, pieces: usize) -> ConstraintSpec {
        if self.is_learning() {
            ConstraintSpec::discrete(0.0, 1.0, 1, pieces)
        } else {
            ConstraintSpec::unbounded(pieces)
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Ok(Algorithm::Sgd),
            "krotov" => Ok(Algorithm::Krotov),
            "ql" => Ok(Algorithm::Ql),
            "dql" => Ok(Algorithm::Dql),
            other => Err(BenchError::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let a: Algorithm = part.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(BenchError::Config("empty algorithm list".into()));
    }
    Ok(out)
}

pub fn run_single(
    algorithm: Algorithm,
    problem: &ProblemSpec,
    constraint: &ConstraintSpec,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<RunResult> {
    let mut rng = rng_from_seed(seed);
    let r = match algorithm {
        Algorithm::Sgd => sgd_run(problem, constraint, &cfg.sgd, &mut rng, seed),
        Algorithm::Krotov => krotov_run(problem, constraint, &cfg.krotov, &mut rng, seed),
        Algorithm::Ql => ql_run(problem, constraint, &cfg.ql, &mut rng, seed),
        Algorithm::Dql => dql_run(problem, constraint, &cfg.dql, &mut rng, seed),
    }?;
    Ok(r)
}

/// Thread pool sized by the config; 0 lets rayon choose.
pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))
}

/// `runs` independent runs; run `k` is seeded with `derive_seed(master, k)`.
/// Results come back in run-index order whatever the schedule.
pub fn run_point(
    pool: &rayon::ThreadPool,
    algorithm: Algorithm,
    problem: &ProblemSpec,
    constraint: &ConstraintSpec,
    cfg: &BenchConfig,
    runs: usize,
    master_seed: u64,
) -> Result<Vec<RunResult>> {
    pool.install(|| {
        (0..runs as u64)
            .into_par_iter()
            .map(|k| run_single(algorithm, problem, constraint, cfg, derive_seed(master_seed, k)))
            .collect()
    })
}

/// Mean and sample standard deviation, folded in order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, std, n }
    }
}
