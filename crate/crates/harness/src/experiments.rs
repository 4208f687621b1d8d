//! One function per figure. Each returns a [`FigureOutput`]; nothing here
//! touches the file system.

use qsp_core::control::{evolve_sequence, posthoc_grid, snap_to_grid, uniform_grid};
use qsp_core::noise::noise_samples;
use qsp_core::qubit::equator_target;
use qsp_core::{derive_seed, rng_from_seed, ConstraintSpec, ControlSequence, ProblemSpec, RunResult};
use serde::Serialize;

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};
use crate::output::{FigureOutput, Point, Record};
use crate::runner::{pool, run_point, run_single, Algorithm};

/// Offset of the noise seeds in the run-index space, far above any run count.
const NOISE_STREAM: u64 = 1 << 40;

struct Ctx<'a> {
    cfg: &'a BenchConfig,
    pool: rayon::ThreadPool,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a BenchConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, pool: pool(cfg.experiment.workers)? })
    }

    fn runs(&self, algorithm: Algorithm, problem: &ProblemSpec, constraint: &ConstraintSpec) -> Result<Vec<RunResult>> {
        self.runs_with(self.cfg, algorithm, problem, constraint)
    }

    fn runs_with(&self, cfg: &BenchConfig, algorithm: Algorithm, problem: &ProblemSpec, constraint: &ConstraintSpec) -> Result<Vec<RunResult>> {
        run_point(&self.pool, algorithm, problem, constraint, cfg, cfg.experiment.runs, cfg.experiment.seed)
    }
}

fn best_point(series: &str, sweep_value: f64, runs: &[RunResult]) -> Point {
    let mut p = Point::new(series, sweep_value);
    p.records = runs
        .iter()
        .enumerate()
        .map(|(k, r)| Record {
            series: series.to_string(),
            sweep_value,
            run: k,
            seed: r.seed,
            fidelity: r.best_fidelity,
            i_f: r.i_f(),
            sequence: Some(r.best_sequence.values.clone()),
        })
        .collect();
    p
}

/// Point from re-evaluated sequences, one per run.
fn evaluated_point(series: &str, sweep_value: f64, runs: &[RunResult], seqs: &[ControlSequence], problem: &ProblemSpec) -> Point {
    let mut p = Point::new(series, sweep_value);
    p.records = runs
        .iter()
        .zip(seqs)
        .enumerate()
        .map(|(k, (r, s))| Record {
            series: series.to_string(),
            sweep_value,
            run: k,
            seed: r.seed,
            fidelity: problem.fidelity_of(s),
            i_f: s.len(),
            sequence: Some(s.values.clone()),
        })
        .collect();
    p
}

/// Highest best-fidelity run, earliest on ties.
fn best_run(runs: &[RunResult]) -> &RunResult {
    runs.iter().fold(&runs[0], |b, r| if r.best_fidelity > b.best_fidelity { r } else { b })
}

fn with_iters(cfg: &BenchConfig, algorithm: Algorithm, n: usize) -> BenchConfig {
    let mut c = cfg.clone();
    match algorithm {
        Algorithm::Sgd => c.sgd.n_iter = n,
        Algorithm::Krotov => c.krotov.n_iter = n,
        Algorithm::Ql => c.ql.n_iter = n,
        Algorithm::Dql => c.dql.n_iter = n,
    }
    c
}

/// Mean best fidelity against the piece budget `N`.
pub fn fig2(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let problem = cfg.problem();
    let mut fig = FigureOutput::new("fig2");
    for &n in &cfg.experiment.pieces {
        for a in cfg.selected(&Algorithm::ALL) {
            let runs = ctx.runs(a, &problem, &a.default_constraint(n))?;
            fig.points.push(best_point(a.name(), n as f64, &runs));
        }
    }
    Ok(fig)
}

/// Best-run pulse profile and Bloch trajectory per algorithm.
pub fn fig3(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let problem = cfg.problem();
    let n = cfg.experiment.fixed_pieces;
    let mut fig = FigureOutput::new("fig3");
    for a in cfg.selected(&Algorithm::ALL) {
        let runs = ctx.runs(a, &problem, &a.default_constraint(n))?;
        let best = best_run(&runs);
        let (_, traj) = evolve_sequence(&problem.initial, &best.best_sequence, &problem.physics);
        fig.files.push((format!("fig3_{a}_profile.csv"), best.best_sequence.to_profile_csv()));
        fig.files.push((format!("fig3_{a}_trajectory.csv"), traj.to_bloch_csv()));
        fig.points.push(best_point(a.name(), n as f64, &runs));
    }
    Ok(fig)
}

/// Effect of bounds: `[0, 1]` against no bound over `N`, and the Krotov
/// inset over `J_max` with bounds `[1 - J_max, J_max]`.
pub fn fig4(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let problem = cfg.problem();
    let gradient = cfg.selected(&[Algorithm::Sgd, Algorithm::Krotov]);
    if gradient.is_empty() {
        return Err(BenchError::Config("fig4 needs sgd or krotov".into()));
    }
    let mut fig = FigureOutput::new("fig4");
    for &n in &cfg.experiment.pieces {
        for &a in &gradient {
            let free = ctx.runs(a, &problem, &ConstraintSpec::unbounded(n))?;
            fig.points.push(best_point(a.name(), n as f64, &free));
            let boxed = ctx.runs(a, &problem, &ConstraintSpec::bounded(0.0, 1.0, n))?;
            fig.points.push(best_point(&format!("{a}/bounded"), n as f64, &boxed));
        }
    }
    if gradient.contains(&Algorithm::Krotov) {
        for &jmax in &cfg.experiment.jmax {
            let c = ConstraintSpec::bounded(1.0 - jmax, jmax, cfg.experiment.fixed_pieces);
            let runs = ctx.runs(Algorithm::Krotov, &problem, &c)?;
            fig.points.push(best_point("krotov/inset", jmax, &runs));
        }
    }
    Ok(fig)
}

/// Unrestricted optimization followed by snapping onto `M + 1` levels
/// spanning each run's own range. The continuous result is repeated at every
/// level as a reference line.
pub fn fig5(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let problem = cfg.problem();
    let gradient = cfg.selected(&[Algorithm::Sgd, Algorithm::Krotov]);
    if gradient.is_empty() {
        return Err(BenchError::Config("fig5 needs sgd or krotov".into()));
    }
    let mut fig = FigureOutput::new("fig5");
    for &n in &cfg.experiment.discrete_pieces {
        for &a in &gradient {
            let runs = ctx.runs(a, &problem, &ConstraintSpec::unbounded(n))?;
            let series = format!("{a}/N={n}");
            for &levels in &cfg.experiment.posthoc_levels {
                let snapped = runs
                    .iter()
                    .map(|r| Ok(snap_to_grid(&r.best_sequence, &posthoc_grid(&r.best_sequence, levels - 1)?)))
                    .collect::<Result<Vec<_>>>()?;
                fig.points.push(evaluated_point(&series, levels as f64, &runs, &snapped, &problem));
                fig.points.push(best_point(&format!("{series}/continuous"), levels as f64, &runs));
            }
        }
    }
    Ok(fig)
}

/// All four algorithms on `[0, 1]` with `M + 1` levels. The learners act on
/// the levels directly; the gradient methods optimize in the box and snap.
pub fn fig6(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let problem = cfg.problem();
    let mut fig = FigureOutput::new("fig6");
    for &n in &cfg.experiment.discrete_pieces {
        for a in cfg.selected(&Algorithm::ALL) {
            let series = format!("{a}/N={n}");
            if a.is_learning() {
                for &levels in &cfg.experiment.restricted_levels {
                    let runs = ctx.runs(a, &problem, &ConstraintSpec::discrete(0.0, 1.0, levels - 1, n))?;
                    fig.points.push(best_point(&series, levels as f64, &runs));
                }
            } else {
                let runs = ctx.runs(a, &problem, &ConstraintSpec::bounded(0.0, 1.0, n))?;
                for &levels in &cfg.experiment.restricted_levels {
                    let grid = uniform_grid(0.0, 1.0, levels - 1)?;
                    let snapped: Vec<_> = runs.iter().map(|r| snap_to_grid(&r.best_sequence, &grid)).collect();
                    fig.points.push(evaluated_point(&series, levels as f64, &runs, &snapped, &problem));
                }
            }
        }
    }
    Ok(fig)
}

/// Best-so-far fidelity against the iteration budget, read from long runs.
pub fn s1(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let problem = cfg.problem();
    let e = &cfg.experiment;
    let mut fig = FigureOutput::new("s1");
    for &n in &e.trace_pieces {
        for a in cfg.selected(&Algorithm::ALL) {
            let long = with_iters(cfg, a, e.trace_iters);
            let runs = ctx.runs_with(&long, a, &problem, &a.default_constraint(n))?;
            let series = format!("{a}/N={n}");
            for &it in &e.trace_checkpoints {
                let mut p = Point::new(&series, it as f64);
                p.records = runs
                    .iter()
                    .enumerate()
                    .map(|(k, r)| Record {
                        series: series.clone(),
                        sweep_value: it as f64,
                        run: k,
                        seed: r.seed,
                        fidelity: a.best_after(r, it),
                        i_f: r.i_f(),
                        sequence: None,
                    })
                    .collect();
                fig.points.push(p);
            }
        }
    }
    Ok(fig)
}

/// Equatorial targets `(|0⟩ + e^{iφ}|1⟩)/√2` over a grid of `φ`.
pub fn s2(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let n = cfg.experiment.fixed_pieces;
    let mut fig = FigureOutput::new("s2");
    for &phi in &cfg.experiment.target_phases {
        let problem = cfg.problem().with_target(equator_target(phi));
        for a in cfg.selected(&Algorithm::ALL) {
            let runs = ctx.runs(a, &problem, &a.default_constraint(n))?;
            fig.points.push(best_point(a.name(), phi, &runs));
        }
    }
    Ok(fig)
}

/// Best sequence of each algorithm under uniform amplitude noise. One record
/// per noise realization.
pub fn s3(cfg: &BenchConfig) -> Result<FigureOutput> {
    let ctx = Ctx::new(cfg)?;
    let problem = cfg.problem();
    let e = &cfg.experiment;
    let mut fig = FigureOutput::new("s3");
    for (ai, a) in cfg.selected(&Algorithm::ALL).into_iter().enumerate() {
        let runs = ctx.runs(a, &problem, &a.default_constraint(e.fixed_pieces))?;
        let seq = best_run(&runs).best_sequence.clone();
        fig.files.push((format!("s3_{a}_sequence.csv"), seq.to_profile_csv()));
        for (ei, &eps) in e.noise_levels.iter().enumerate() {
            let seed = derive_seed(e.seed, NOISE_STREAM + (ai as u64) * 1024 + ei as u64);
            let samples = noise_samples(&seq, eps, e.noise_realizations, &problem, &mut rng_from_seed(seed));
            let mut p = Point::new(a.name(), eps);
            p.records = samples
                .into_iter()
                .enumerate()
                .map(|(k, f)| Record {
                    series: a.name().to_string(),
                    sweep_value: eps,
                    run: k,
                    seed,
                    fidelity: f,
                    i_f: seq.len(),
                    sequence: None,
                })
                .collect();
            fig.points.push(p);
        }
    }
    Ok(fig)
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleRun {
    pub algorithm: Algorithm,
    pub constraint: ConstraintSpec,
    pub result: RunResult,
}

/// One run of one algorithm, seeded with the configured seed itself.
pub fn single_run(cfg: &BenchConfig) -> Result<SingleRun> {
    cfg.validate()?;
    let [a] = cfg.experiment.algorithms[..] else {
        return Err(BenchError::Config("single-run needs exactly one algorithm".into()));
    };
    let constraint = a.default_constraint(cfg.experiment.fixed_pieces);
    let result = run_single(a, &cfg.problem(), &constraint, cfg, cfg.experiment.seed)?;
    Ok(SingleRun { algorithm: a, constraint, result })
}

pub const FIGURES: [&str; 8] = ["fig2", "fig3", "fig4", "fig5", "fig6", "s1", "s2", "s3"];

pub fn run_figure(name: &str, cfg: &BenchConfig) -> Result<FigureOutput> {
    match name {
        "fig2" => fig2(cfg),
        "fig3" => fig3(cfg),
        "fig4" => fig4(cfg),
        "fig5" => fig5(cfg),
        "fig6" => fig6(cfg),
        "s1" => s1(cfg),
        "s2" => s2(cfg),
        "s3" => s3(cfg),
        other => Err(BenchError::Config(format!("unknown experiment '{other}'"))),
    }
}
