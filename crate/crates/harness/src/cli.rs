use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{BenchConfig, Overrides};
use crate::error::{BenchError, Result};
use crate::experiments::{run_figure, single_run};
use crate::runner::parse_algorithms;

#[derive(Debug, Parser)]
#[command(name = "qsp-bench", version, about = "Qubit state-preparation benchmarks: SGD, Krotov, Q-learning and deep Q-learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Runs per sweep point.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Iteration (episode) budget for every algorithm.
    #[arg(long, global = true)]
    iters: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Comma-separated subset of sgd,krotov,ql,dql.
    #[arg(long, global = true)]
    algorithms: Option<String>,
    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Mean fidelity against the number of pieces N.
    Fig2,
    /// Best pulse profiles and Bloch trajectories.
    Fig3,
    /// Effect of bounds on the control field.
    Fig4,
    /// Post-hoc discretization of unrestricted results.
    Fig5,
    /// All algorithms on [0, 1] with M+1 discrete levels.
    Fig6,
    /// Mean fidelity against the iteration budget.
    S1,
    /// Dependence on the target state's azimuth.
    S2,
    /// Robustness of the best sequences to control noise.
    S3,
    /// One run of one algorithm, printed as JSON.
    SingleRun,
}

impl Command {
    fn figure(self) -> Option<&'static str> {
        Some(match self {
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Fig5 => "fig5",
            Command::Fig6 => "fig6",
            Command::S1 => "s1",
            Command::S2 => "s2",
            Command::S3 => "s3",
            Command::SingleRun => return None,
        })
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_to(args, &mut std::io::stdout())
}

/// Same as [`run`], with normal output going to `stdout`.
pub fn run_to<I, T, W>(args: I, stdout: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qsp-bench: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<BenchConfig> {
    let mut cfg = match &cli.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    let algorithms = cli.algorithms.as_deref().map(parse_algorithms).transpose()?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        runs: cli.runs,
        iters: cli.iters,
        workers: cli.workers,
        algorithms,
    })?;
    Ok(cfg)
}

fn execute<W: Write>(cli: &Cli, stdout: &mut W) -> Result<()> {
    let cfg = load_config(cli)?;
    match cli.command.figure() {
        Some(name) => {
            let fig = run_figure(name, &cfg)?;
            for path in fig.write(&cli.out, &cfg)? {
                writeln!(stdout, "{}", path.display()).map_err(|e| BenchError::io("<stdout>", e))?;
            }
        }
        None => {
            let run = single_run(&cfg)?;
            let text = serde_json::to_string(&run).expect("run serializes");
            write_file(&cli.out, "single-run.json", &(text.clone() + "\n"))?;
            writeln!(stdout, "{text}").map_err(|e| BenchError::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| BenchError::io(&path, e))
}
