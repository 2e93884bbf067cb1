//! Experiment runner behind the `qeh` binary.
//!
//! A run takes an [`ExperimentConfig`] and a seed, and produces a
//! [`RunReport`] plus named CSV series. Randomness comes from
//! `ChaCha8Rng::seed_from_u64(seed)` (the ChaCha stream cipher with 8
//! rounds, a counter-based generator with a portable output stream), one
//! generator per job, so results do not depend on scheduling. Floats in
//! CSV files are written as `{:.16e}` (17 significant digits).
//!
//! ```
//! use qeh::harness::{run, ClassifyMapConfig, Experiment, ExperimentConfig};
//! use qeh::classical::MapSpec;
//!
//! let cfg = ExperimentConfig::new(Experiment::ClassifyMap(ClassifyMapConfig {
//!     map: MapSpec::Rotation { alpha: 0.0 },
//!     ..Default::default()
//! }));
//! let out = run(&cfg, 7).unwrap();
//! assert!(out.report.verdicts[0].levels.iter().all(|l| !l.passed));
//! ```

mod config;
mod experiments;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    default_experiment, load_experiment, load_toml, parse_experiment, parse_toml, ClassifyMapConfig, DephasingConfig, Experiment, ExperimentConfig, InitialDef,
    KickedRotatorConfig, LambdaScan, QehTestConfig, RotatorInitial, SetDef, SpectrumDef, StepDef,
    SweepConfig, WignerCheckConfig, SUBCOMMANDS,
};

use crate::verdict::{HierarchyVerdict, Level};

/// Version of the CSV column layouts.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: crate::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {0}")]
    Output(String),
}

pub(crate) trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, HarnessError>;
}

impl<T> Context<T> for crate::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T, HarnessError> {
        self.map_err(|source| HarnessError::Module {
            context: what.into(),
            source,
        })
    }
}

pub(crate) fn config_error(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A named table written to `series/<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Series {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let err = |e: csv::Error| HarnessError::Output(format!("{}.csv: {e}", self.name));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(err)?;
        }
        w.into_inner()
            .map_err(|e| HarnessError::Output(format!("{}.csv: {e}", self.name)))
    }
}

/// Structured summary of one run, written as `report.txt` (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub csv_schema: u32,
    pub subcommand: String,
    pub label: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub series: Vec<String>,
    pub notes: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
    pub verdicts: Vec<HierarchyVerdict>,
}

impl RunReport {
    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Output(format!("report: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        parse_toml(text)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub series: Vec<Series>,
}

/// Everything an experiment produces apart from bookkeeping.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub verdicts: Vec<HierarchyVerdict>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub series: Vec<Series>,
}

impl Outcome {
    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }
}

/// Runs one experiment. `config.seed` takes precedence over `seed`.
pub fn run(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, HarnessError> {
    let seed = config.seed.unwrap_or(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let outcome = match &config.experiment {
        Experiment::ClassifyMap(c) => experiments::classify_map(c)?,
        Experiment::QehTest(c) => experiments::qeh_test(c, &mut rng)?,
        Experiment::KickedRotator(c) => experiments::kicked_rotator(c, &mut rng)?,
        Experiment::Dephasing(c) => experiments::dephasing(c, &mut rng)?,
        Experiment::WignerCheck(c) => experiments::wigner_check(c, &mut rng)?,
    };
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").into(),
        csv_schema: CSV_SCHEMA,
        subcommand: config.subcommand().into(),
        label: config.label.clone().unwrap_or_else(|| config.subcommand().into()),
        seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        series: outcome.series.iter().map(|s| format!("series/{}.csv", s.name)).collect(),
        notes: outcome.notes,
        metrics: outcome.metrics,
        config: config.clone(),
        verdicts: outcome.verdicts,
    };
    Ok(RunOutput {
        report,
        series: outcome.series,
    })
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_series(dir: &Path, series: &[Series]) -> Result<(), HarnessError> {
    let sdir = dir.join("series");
    fs::create_dir_all(&sdir).map_err(io_error(&sdir))?;
    for s in series {
        let path = sdir.join(format!("{}.csv", s.name));
        fs::write(&path, s.to_csv()?).map_err(io_error(&path))?;
    }
    Ok(())
}

/// Writes `report.txt` and `series/*.csv` under `dir`.
pub fn write_run(dir: &Path, output: &RunOutput) -> Result<(), HarnessError> {
    write_series(dir, &output.series)?;
    let path = dir.join("report.txt");
    fs::write(&path, output.report.to_toml()?).map_err(io_error(&path))
}

/// Runs `configs` on `workers` threads; results are in input order.
pub fn sweep(configs: &[ExperimentConfig], seed: u64, workers: usize) -> Vec<Result<RunOutput, HarnessError>> {
    let order: Vec<usize> = (0..configs.len()).collect();
    sweep_in_order(configs, seed, workers, &order)
}

/// As [`sweep`], submitting jobs in the permutation `order`.
pub fn sweep_in_order(
    configs: &[ExperimentConfig],
    seed: u64,
    workers: usize,
    order: &[usize],
) -> Vec<Result<RunOutput, HarnessError>> {
    assert_eq!(order.len(), configs.len(), "order must permute the jobs");
    let job = |&i: &usize| (i, run(&configs[i], seed));
    let mut done: Vec<(usize, Result<RunOutput, HarnessError>)> =
        match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
            Ok(pool) => pool.install(|| order.par_iter().map(job).collect()),
            Err(_) => order.iter().map(job).collect(),
        };
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, r)| r).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub index: usize,
    pub label: String,
    pub subcommand: String,
    pub ok: bool,
    pub error: String,
    pub directory: String,
}

/// Summary written to the top-level `report.txt` of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub version: String,
    pub csv_schema: u32,
    pub seed: u64,
    pub jobs: Vec<JobRecord>,
}

fn verdict_table(configs: &[ExperimentConfig], results: &[Result<RunOutput, HarnessError>]) -> Series {
    let mut header = vec!["job", "label", "subcommand", "system", "epsilon"];
    let levels = Level::ALL;
    let names: Vec<String> = levels
        .iter()
        .flat_map(|l| [format!("{}_passed", l.name()), format!("{}_residual", l.name())])
        .collect();
    header.extend(names.iter().map(String::as_str));
    let mut s = Series::new("verdicts", &header);
    for (i, (cfg, r)) in configs.iter().zip(results).enumerate() {
        let Ok(out) = r else { continue };
        for v in &out.report.verdicts {
            let mut row: Vec<Cell> = vec![
                i.into(),
                out.report.label.clone().into(),
                cfg.subcommand().into(),
                v.system.clone().into(),
                v.epsilon.into(),
            ];
            for l in levels {
                match v.get(l) {
                    Some(r) => {
                        row.push(r.passed.into());
                        row.push(r.residual.into());
                    }
                    None => {
                        row.push("".into());
                        row.push("".into());
                    }
                }
            }
            s.push(row);
        }
    }
    s
}

/// Writes each job under `jobs/NNN/`, a `series/verdicts.csv` table with
/// one row per verdict, and a summary `report.txt`.
pub fn write_sweep(
    dir: &Path,
    configs: &[ExperimentConfig],
    seed: u64,
    results: &[Result<RunOutput, HarnessError>],
) -> Result<SweepReport, HarnessError> {
    let mut jobs = Vec::with_capacity(results.len());
    for (i, (cfg, r)) in configs.iter().zip(results).enumerate() {
        let sub = format!("jobs/{i:03}");
        let (ok, error) = match r {
            Ok(out) => {
                write_run(&dir.join(&sub), out)?;
                (true, String::new())
            }
            Err(e) => (false, e.to_string()),
        };
        jobs.push(JobRecord {
            index: i,
            label: cfg.label.clone().unwrap_or_else(|| cfg.subcommand().into()),
            subcommand: cfg.subcommand().into(),
            ok,
            error,
            directory: sub,
        });
    }
    write_series(dir, &[verdict_table(configs, results)])?;
    let report = SweepReport {
        version: env!("CARGO_PKG_VERSION").into(),
        csv_schema: CSV_SCHEMA,
        seed,
        jobs,
    };
    let text = toml::to_string(&report).map_err(|e| HarnessError::Output(format!("report: {e}")))?;
    let path = dir.join("report.txt");
    fs::write(&path, text).map_err(io_error(&path))?;
    Ok(report)
}
