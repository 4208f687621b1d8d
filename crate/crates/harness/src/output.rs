//! Figure outputs: a summary CSV, per-run JSON lines, optional side files and
//! a JSON manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};
use crate::runner::Summary;

pub const CSV_HEADER: &str = "sweep_value,algorithm,mean_F,std_F,n_runs";

/// One value that enters a point's mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub series: String,
    pub sweep_value: f64,
    pub run: usize,
    pub seed: u64,
    pub fidelity: f64,
    /// Pieces in the evaluated sequence.
    pub i_f: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sequence: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub series: String,
    pub sweep_value: f64,
    pub records: Vec<Record>,
}

impl Point {
    pub fn new(series: impl Into<String>, sweep_value: f64) -> Self {
        Self { series: series.into(), sweep_value, records: Vec::new() }
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.records.iter().map(|r| r.fidelity).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Default)]
pub struct FigureOutput {
    pub name: String,
    pub points: Vec<Point>,
    /// Extra files written next to the CSV, as (file name, contents).
    pub files: Vec<(String, String)>,
}

impl FigureOutput {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Default::default() }
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let s = p.summary();
            writeln!(out, "{},{},{},{},{}", p.sweep_value, p.series, s.mean, s.std, s.n).unwrap();
        }
        out
    }

    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.points.iter().flat_map(|p| &p.records) {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn manifest(&self, cfg: &BenchConfig, files: &[String]) -> serde_json::Value {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let points: Vec<_> = self
            .points
            .iter()
            .map(|p| {
                let s = p.summary();
                json!({"series": p.series, "sweep_value": p.sweep_value, "mean_F": s.mean, "std_F": s.std, "n_runs": s.n})
            })
            .collect();
        json!({
            "figure": self.name,
            "seed": cfg.experiment.seed,
            "config_sha256": cfg.hash(),
            "config": cfg,
            "created_unix": created,
            "files": files,
            "points": points,
        })
    }

    /// Writes everything into `dir` and returns the paths written.
    pub fn write(&self, dir: &Path, cfg: &BenchConfig) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        let mut contents = vec![
            (format!("{}.csv", self.name), self.csv()),
            (format!("{}_runs.jsonl", self.name), self.jsonl()),
        ];
        contents.extend(self.files.iter().cloned());
        let names: Vec<String> = contents.iter().map(|(n, _)| n.clone()).collect();
        let manifest = serde_json::to_string_pretty(&self.manifest(cfg, &names)).expect("manifest serializes");
        contents.push((format!("{}_manifest.json", self.name), manifest + "\n"));

        let mut written = Vec::with_capacity(contents.len());
        for (name, text) in contents {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
