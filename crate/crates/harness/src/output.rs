//! On-disk run artifacts: `run.json`, `trace.csv`, `archive.csv` and
//! `events.log`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use agentopt::events::Event;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::run::{RunReport, SchedulerSummary, SolverSummary, TraceRow};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn mode_name(sharing: bool) -> &'static str {
    if sharing {
        "cooperating"
    } else {
        "independent"
    }
}

/// Summary written to `run.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub problem: String,
    pub mode: String,
    pub rep: usize,
    pub population_seed: u64,
    pub n_obj: usize,
    pub n_vars: usize,
    pub valid: bool,
    pub failures: Vec<String>,
    pub wall_time_s: f64,
    pub best_z: Option<Vec<f64>>,
    pub best_g: Option<f64>,
    pub archive_size: usize,
    #[serde(default)]
    pub scheduler: serde_json::Value,
    #[serde(default)]
    pub solvers: serde_json::Value,
    #[serde(default)]
    pub config: serde_json::Value,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

impl RunMeta {
    pub fn new(cfg: &RunConfig, r: &RunReport) -> Self {
        let best = r.archive.best();
        RunMeta {
            problem: r.problem.name.clone(),
            mode: mode_name(r.sharing).into(),
            rep: r.rep,
            population_seed: r.population_seed,
            n_obj: r.problem.n_obj,
            n_vars: r.problem.domain.len(),
            valid: r.valid,
            failures: r.failures.clone(),
            wall_time_s: r.wall_time.as_secs_f64(),
            best_z: best.map(|e| e.z.clone()),
            best_g: best.map(|e| e.g),
            archive_size: r.archive.members().len(),
            scheduler: to_value::<SchedulerSummary>(&r.scheduler),
            solvers: to_value::<Vec<SolverSummary>>(&r.solvers),
            config: to_value(cfg),
        }
    }
}

pub fn trace_header(n_obj: usize) -> Vec<String> {
    let mut h = vec!["seq".to_string(), "scheduler_iter".to_string()];
    h.extend((1..=n_obj).map(|k| format!("best_z{k}")));
    h.extend(["g", "instance_label", "class"].map(String::from));
    h
}

fn trace_record(row: &TraceRow) -> Vec<String> {
    let mut r = vec![row.seq.to_string(), row.scheduler_iter.to_string()];
    r.extend(row.z.iter().map(|v| v.to_string()));
    r.push(row.g.to_string());
    r.push(row.label.clone());
    r.push(row.class.to_string());
    r
}

pub fn write_trace(path: &Path, n_obj: usize, trace: &[TraceRow]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(trace_header(n_obj)).map_err(csv_err(path))?;
    for row in trace {
        w.write_record(trace_record(row)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_archive(path: &Path, r: &RunReport) -> Result<(), OutputError> {
    let n_obj = r.problem.n_obj;
    let n_vars = r.problem.domain.len();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["seq".to_string(), "solver".to_string(), "instance_label".to_string()];
    header.extend((1..=n_obj).map(|k| format!("z{k}")));
    header.push("g".into());
    header.extend((1..=n_vars).map(|k| format!("d{k}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for e in r.archive.members() {
        let label = r
            .solvers
            .get(e.solver.0)
            .map_or_else(|| "?".to_string(), |s| s.label.clone());
        let mut rec = vec![e.seq.to_string(), e.solver.0.to_string(), label];
        rec.extend(e.z.iter().map(|v| v.to_string()));
        rec.push(e.g.to_string());
        rec.extend(e.point.values().iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_events(path: &Path, r: &RunReport) -> Result<(), OutputError> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    for e in &r.events {
        serde_json::to_writer(&mut w, e).map_err(|source| OutputError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes every artifact of one run into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, r: &RunReport) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = RunMeta::new(cfg, r);
    let p = dir.join("run.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|source| OutputError::Json {
        path: p.clone(),
        source,
    })?;
    fs::write(&p, text).map_err(io_err(&p))?;
    write_trace(&dir.join("trace.csv"), r.problem.n_obj, &r.trace)?;
    write_archive(&dir.join("archive.csv"), r)?;
    write_events(&dir.join("events.log"), r)
}

pub fn read_meta(dir: &Path) -> Result<RunMeta, OutputError> {
    let p = dir.join("run.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path: p, source })
}

pub fn read_events(path: &Path) -> Result<Vec<Event>, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| OutputError::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

/// Objective vectors and constraint values from an `archive.csv`.
pub fn read_archive(path: &Path) -> Result<Vec<(Vec<f64>, f64)>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    let z_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.len() > 1 && h.starts_with('z') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .map(|(i, _)| i)
        .collect();
    let g_col = header.iter().position(|h| h == "g");
    if z_cols.is_empty() {
        return Err(OutputError::Format {
            path: path.to_path_buf(),
            message: "no objective columns (z1, z2, ...)".into(),
        });
    }
    let bad = |message: String| OutputError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let parse = |i: usize| -> Result<f64, OutputError> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: column {} is not a number", line + 2, i + 1)))
        };
        let z = z_cols.iter().map(|&i| parse(i)).collect::<Result<Vec<_>, _>>()?;
        let g = match g_col {
            Some(i) => parse(i)?,
            None => -1.0,
        };
        out.push((z, g));
    }
    Ok(out)
}

/// Reads a two-column point list (`z1,z2`); a non-numeric first row is
/// taken as a header.
pub fn read_points(path: &Path) -> Result<Vec<[f64; 2]>, OutputError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let vals: Option<Vec<f64>> = rec.iter().take(2).map(|s| s.parse().ok()).collect();
        match vals {
            Some(v) if v.len() == 2 => out.push([v[0], v[1]]),
            _ if i == 0 => continue,
            _ => {
                return Err(OutputError::Format {
                    path: path.to_path_buf(),
                    message: format!("row {} is not a pair of numbers", i + 1),
                })
            }
        }
    }
    Ok(out)
}
