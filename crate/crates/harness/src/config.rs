//! TOML configuration. Every block and key is optional; missing values take
//! the defaults below. Unknown keys are rejected.

use std::f64::consts::PI;
use std::path::Path;

use qsp_core::deep::DqlConfig;
use qsp_core::krotov::KrotovConfig;
use qsp_core::sgd::SgdConfig;
use qsp_core::tabular::QlConfig;
use qsp_core::{PhysicsConfig, ProblemSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};
use crate::runner::Algorithm;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub problem: PhysicsConfig,
    pub sgd: SgdConfig,
    pub krotov: KrotovConfig,
    pub ql: QlConfig,
    pub dql: DqlConfig,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub runs: usize,
    /// Worker threads; 0 uses one per core. Does not affect any output.
    pub workers: usize,
    pub algorithms: Vec<Algorithm>,
    /// Piece counts for the N sweeps.
    pub pieces: Vec<usize>,
    /// Piece count for profiles, the bound inset, the target sweep, noise and single runs.
    pub fixed_pieces: usize,
    pub jmax: Vec<f64>,
    pub discrete_pieces: Vec<usize>,
    /// `M + 1` values for post-hoc snapping.
    pub posthoc_levels: Vec<usize>,
    /// `M + 1` values for the restricted discrete comparison.
    pub restricted_levels: Vec<usize>,
    pub trace_pieces: Vec<usize>,
    pub trace_iters: usize,
    pub trace_checkpoints: Vec<usize>,
    pub target_phases: Vec<f64>,
    pub noise_levels: Vec<f64>,
    pub noise_realizations: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            runs: 20,
            workers: 0,
            algorithms: Algorithm::ALL.to_vec(),
            pieces: vec![2, 6, 10, 20, 30, 40, 50],
            fixed_pieces: 20,
            jmax: vec![1.0, 2.0, 5.0, 10.0, 20.0],
            discrete_pieces: vec![6, 20],
            posthoc_levels: vec![2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 50],
            restricted_levels: vec![2, 3, 4, 6, 8, 10, 15, 20],
            trace_pieces: vec![20, 50],
            trace_iters: 10_000,
            trace_checkpoints: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000],
            target_phases: (0..8).map(|k| k as f64 * PI / 4.0).collect(),
            noise_levels: vec![0.0, 0.05, 0.1, 0.2, 0.3],
            noise_realizations: 100,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub iters: Option<usize>,
    pub workers: Option<usize>,
    pub algorithms: Option<Vec<Algorithm>>,
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.experiment.seed = s;
        }
        if let Some(r) = o.runs {
            self.experiment.runs = r;
        }
        if let Some(w) = o.workers {
            self.experiment.workers = w;
        }
        if let Some(a) = &o.algorithms {
            self.experiment.algorithms = a.clone();
        }
        if let Some(n) = o.iters {
            self.sgd.n_iter = n;
            self.krotov.n_iter = n;
            self.ql.n_iter = n;
            self.dql.n_iter = n;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.sgd.validate()?;
        self.krotov.validate()?;
        self.ql.validate()?;
        self.dql.validate()?;
        let e = &self.experiment;
        let fail = |m: &str| Err(BenchError::Config(m.to_string()));
        if e.runs == 0 {
            return fail("experiment.runs must be at least 1");
        }
        if e.algorithms.is_empty() {
            return fail("experiment.algorithms is empty");
        }
        if e.fixed_pieces == 0 || e.pieces.is_empty() || e.pieces.contains(&0) {
            return fail("piece counts must be positive and the sweep nonempty");
        }
        if e.discrete_pieces.is_empty() || e.discrete_pieces.contains(&0) || e.trace_pieces.is_empty() || e.trace_pieces.contains(&0) {
            return fail("piece counts must be positive and the sweep nonempty");
        }
        if e.jmax.is_empty() || e.jmax.iter().any(|j| !(j.is_finite() && *j >= 0.5)) {
            return fail("experiment.jmax values must be at least 0.5");
        }
        if e.posthoc_levels.is_empty() || e.restricted_levels.is_empty() {
            return fail("level sweeps must be nonempty");
        }
        if e.posthoc_levels.iter().chain(&e.restricted_levels).any(|&l| l < 2) {
            return fail("level counts M+1 must be at least 2");
        }
        if e.trace_iters == 0 || e.trace_checkpoints.is_empty() || e.trace_checkpoints.iter().any(|&c| c == 0 || c > e.trace_iters) {
            return fail("trace checkpoints must lie in 1..=trace_iters");
        }
        if e.target_phases.is_empty() || e.target_phases.iter().any(|p| !p.is_finite()) {
            return fail("experiment.target_phases must be finite and nonempty");
        }
        if e.noise_levels.is_empty() || e.noise_levels.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return fail("noise levels must be finite and non-negative");
        }
        if e.noise_realizations == 0 {
            return fail("experiment.noise_realizations must be at least 1");
        }
        Ok(())
    }

    pub fn problem(&self) -> ProblemSpec {
        ProblemSpec { physics: self.problem, ..Default::default() }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn selected(&self, among: &[Algorithm]) -> Vec<Algorithm> {
        among.iter().copied().filter(|a| self.experiment.algorithms.contains(a)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(BenchConfig::from_toml("").unwrap(), BenchConfig::default());
    }

    #[test]
    fn partial_blocks_merge_with_defaults() {
        let c = BenchConfig::from_toml("[sgd]\nlearn_rate = 0.5\n[experiment]\nruns = 3\nalgorithms = [\"dql\"]\n").unwrap();
        assert_eq!(c.sgd.learn_rate, 0.5);
        assert_eq!(c.sgd.probe_step, SgdConfig::default().probe_step);
        assert_eq!(c.experiment.runs, 3);
        assert_eq!(c.experiment.algorithms, vec![Algorithm::Dql]);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(BenchConfig::from_toml("[sgd]\nlearnrate = 0.5\n").is_err());
        assert!(BenchConfig::from_toml("[bogus]\n").is_err());
        assert!(BenchConfig::from_toml("[experiment]\nruns = 0\n").is_err());
        assert!(BenchConfig::from_toml("[ql]\ndiscount = 1.5\n").is_err());
        assert!(BenchConfig::from_toml("[experiment]\nalgorithms = [\"grape\"]\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = BenchConfig::default();
        c.dql.hidden_layout = vec![8];
        c.experiment.noise_levels = vec![0.0, 0.4];
        assert_eq!(BenchConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn hash_tracks_every_field() {
        let base = BenchConfig::default();
        let mut other = base.clone();
        assert_eq!(base.hash(), other.hash());
        other.krotov.update_scale += 1e-9;
        assert_ne!(base.hash(), other.hash());
        let mut other = base.clone();
        other.experiment.workers = 3;
        assert_ne!(base.hash(), other.hash());
        assert_eq!(base.hash().len(), 64);
    }

    #[test]
    fn iteration_override_hits_all_algorithms() {
        let mut c = BenchConfig::default();
        c.apply(&Overrides { iters: Some(7), ..Default::default() }).unwrap();
        assert_eq!((c.sgd.n_iter, c.krotov.n_iter, c.ql.n_iter, c.dql.n_iter), (7, 7, 7, 7));
    }
}
