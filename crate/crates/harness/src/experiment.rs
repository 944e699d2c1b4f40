//! Paired experiments: every repetition runs once with sharing off and once
//! with sharing on, from the same initial population.

use std::fs;
use std::path::{Path, PathBuf};

use agentopt::benchmarks::{problem_front_samples, registry_get};
use agentopt::metrics::{
    area_trapezoid, average_distance, generational_distance, hypervolume, hypervolume_complement,
    Point2,
};
use agentopt::problem::MetricAnchors;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{
    csv_err, io_err, mode_name, read_archive, read_meta, trace_header, write_run, OutputError,
};
use crate::run::{run_once, RunError, RunReport};

pub const MODES: [bool; 2] = [false, true];
pub const FRONT_SAMPLES: usize = 1000;

/// What the summaries need from one finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub sharing: bool,
    pub rep: usize,
    pub valid: bool,
    pub best_z: Option<f64>,
    pub best_feasible: bool,
    /// Objective vectors of the final archive (feasible members when any).
    pub front: Vec<Vec<f64>>,
    pub dir: PathBuf,
}

impl RunRecord {
    pub fn from_report(r: &RunReport, dir: PathBuf) -> Self {
        let members: Vec<(Vec<f64>, f64)> = r.archive.members().iter().map(|e| (e.z.clone(), e.g)).collect();
        RunRecord {
            sharing: r.sharing,
            rep: r.rep,
            valid: r.valid,
            best_z: r.best_z(),
            best_feasible: r.best_feasible(),
            front: feasible_front(&members),
            dir,
        }
    }

    pub fn front2(&self) -> Vec<Point2> {
        self.front.iter().filter(|z| z.len() == 2).map(|z| [z[0], z[1]]).collect()
    }
}

fn feasible_front(members: &[(Vec<f64>, f64)]) -> Vec<Vec<f64>> {
    let any_feasible = members.iter().any(|(_, g)| *g <= 0.0);
    members
        .iter()
        .filter(|(_, g)| !any_feasible || *g <= 0.0)
        .map(|(z, _)| z.clone())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub records: Vec<RunRecord>,
    pub failures: Vec<String>,
    pub boxplot: Vec<BoxRow>,
    pub metrics: Option<Vec<MetricRow>>,
}

impl Serialize for RunRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RunRecord", 5)?;
        st.serialize_field("mode", mode_name(self.sharing))?;
        st.serialize_field("rep", &self.rep)?;
        st.serialize_field("valid", &self.valid)?;
        st.serialize_field("best_z", &self.best_z)?;
        st.serialize_field("front_size", &self.front.len())?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxRow {
    pub measure: String,
    pub mode: String,
    pub runs: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub measure: String,
    pub independent: Option<f64>,
    pub cooperating: Option<f64>,
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_numbers(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    [0.0, 0.25, 0.5, 0.75, 1.0].map(|p| quantile(&v, p))
}

pub fn median(values: &[f64]) -> f64 {
    five_numbers(values)[2]
}

/// Utopia and reference points: the problem's own when known, otherwise the
/// ideal and nadir of all fronts with the reference pushed out by 10%.
pub fn anchors_for(known: Option<MetricAnchors>, fronts: &[Vec<Point2>]) -> Option<MetricAnchors> {
    if known.is_some() {
        return known;
    }
    let all: Vec<Point2> = fronts.iter().flatten().copied().collect();
    if all.is_empty() {
        return None;
    }
    let lo = [0, 1].map(|k| all.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min));
    let hi = [0, 1].map(|k| all.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max));
    let reference = [0, 1].map(|k| hi[k] + 0.1 * (hi[k] - lo[k]).max(1e-12));
    Some(MetricAnchors {
        utopia: lo,
        reference,
    })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Box-plot rows: final best value for one objective, hypervolume for two.
pub fn boxplot_rows(records: &[RunRecord], n_obj: usize, anchors: Option<MetricAnchors>) -> Vec<BoxRow> {
    let mut rows = Vec::new();
    for sharing in MODES {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.sharing == sharing && r.valid)
            .filter_map(|r| {
                if n_obj == 1 {
                    r.best_z
                } else {
                    anchors.map(|a| hypervolume(&r.front2(), a.reference))
                }
            })
            .collect();
        if values.is_empty() {
            continue;
        }
        let [min, q1, median, q3, max] = five_numbers(&values);
        rows.push(BoxRow {
            measure: if n_obj == 1 { "best_z".into() } else { "hypervolume".into() },
            mode: mode_name(sharing).into(),
            runs: values.len(),
            min,
            q1,
            median,
            q3,
            max,
        });
    }
    rows
}

/// Mean of each front measure per mode.
pub fn metric_rows(records: &[RunRecord], anchors: MetricAnchors, true_front: Option<&[Point2]>) -> Vec<MetricRow> {
    type Measure<'a> = Box<dyn Fn(&[Point2]) -> Option<f64> + 'a>;
    let measures: Vec<(&str, Measure)> = vec![
        (
            "hypervolume (dominated area, higher is better)",
            Box::new(|f: &[Point2]| Some(hypervolume(f, anchors.reference))),
        ),
        (
            "hypervolume complement (lower is better)",
            Box::new(|f: &[Point2]| Some(hypervolume_complement(f, anchors.reference, anchors.utopia))),
        ),
        ("area", Box::new(|f: &[Point2]| Some(area_trapezoid(f).value))),
        (
            "average distance",
            Box::new(|f: &[Point2]| average_distance(f, anchors.utopia).ok()),
        ),
        (
            "generational distance",
            Box::new(move |f: &[Point2]| true_front.and_then(|t| generational_distance(f, t).ok())),
        ),
        ("non-dominated points", Box::new(|f: &[Point2]| Some(f.len() as f64))),
    ];
    measures
        .iter()
        .map(|(name, m)| {
            let per_mode = |sharing: bool| {
                let v: Vec<f64> = records
                    .iter()
                    .filter(|r| r.sharing == sharing && r.valid)
                    .filter_map(|r| m(&r.front2()))
                    .collect();
                mean(&v)
            };
            MetricRow {
                measure: name.to_string(),
                independent: per_mode(false),
                cooperating: per_mode(true),
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

pub fn write_boxplot(path: &Path, rows: &[BoxRow]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["measure", "independent", "cooperating"]).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([r.measure.clone(), fmt_opt(r.independent), fmt_opt(r.cooperating)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Concatenates per-run traces, prefixed by mode and repetition.
fn write_combined_trace(path: &Path, records: &[RunRecord], n_obj: usize) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["mode".to_string(), "rep".to_string()];
    header.extend(trace_header(n_obj));
    w.write_record(&header).map_err(csv_err(path))?;
    for rec in records {
        let p = rec.dir.join("trace.csv");
        let Ok(mut r) = csv::Reader::from_path(&p) else {
            continue;
        };
        for row in r.records() {
            let row = row.map_err(csv_err(&p))?;
            let mut out = vec![mode_name(rec.sharing).to_string(), rec.rep.to_string()];
            out.extend(row.iter().map(String::from));
            w.write_record(&out).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn run_dir(root: &Path, sharing: bool, rep: usize) -> PathBuf {
    root.join(mode_name(sharing)).join(format!("rep_{rep:02}"))
}

/// Writes `boxplot.csv`, `trace.csv` and, for two objectives, `metrics.csv`.
pub fn summarize(
    root: &Path,
    problem_name: &str,
    records: Vec<RunRecord>,
    failures: Vec<String>,
) -> Result<ExperimentSummary, ExperimentError> {
    let problem = registry_get(problem_name).map_err(RunError::from)?;
    let n_obj = problem.n_obj;
    let fronts: Vec<Vec<Point2>> = records.iter().map(|r| r.front2()).collect();
    let anchors = if n_obj == 2 {
        anchors_for(problem.anchors, &fronts)
    } else {
        None
    };
    let boxplot = boxplot_rows(&records, n_obj, anchors);
    write_boxplot(&root.join("boxplot.csv"), &boxplot)?;
    write_combined_trace(&root.join("trace.csv"), &records, n_obj)?;
    let metrics = match anchors {
        Some(a) => {
            let true_front = problem_front_samples(&problem, FRONT_SAMPLES).ok();
            let rows = metric_rows(&records, a, true_front.as_deref());
            write_metrics(&root.join("metrics.csv"), &rows)?;
            Some(rows)
        }
        None => None,
    };
    Ok(ExperimentSummary {
        records,
        failures,
        boxplot,
        metrics,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

/// Runs `repetitions` paired runs and writes all reports and summaries
/// below `cfg.output_dir`. A failed run is recorded and skipped.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentSummary, ExperimentError> {
    cfg.validate().map_err(RunError::from)?;
    let root = &cfg.output_dir;
    fs::create_dir_all(root).map_err(io_err(root))?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for sharing in MODES {
        for rep in 0..cfg.repetitions {
            let dir = run_dir(root, sharing, rep);
            match run_once(cfg, rep, sharing) {
                Ok(report) => {
                    write_run(&dir, cfg, &report)?;
                    if !report.valid {
                        failures.push(format!("{}: {}", dir.display(), report.failures.join("; ")));
                    }
                    records.push(RunRecord::from_report(&report, dir));
                }
                Err(RunError::Problem(e)) => return Err(RunError::Problem(e).into()),
                Err(e) => failures.push(format!("{}: {e}", dir.display())),
            }
        }
    }
    summarize(root, &cfg.problem, records, failures)
}

/// Rebuilds the summaries from the run directories under `root`.
pub fn report(root: &Path) -> Result<ExperimentSummary, ExperimentError> {
    let mut records = Vec::new();
    let mut problem = None;
    for sharing in MODES {
        let mode_dir = root.join(mode_name(sharing));
        let Ok(entries) = fs::read_dir(&mode_dir) else {
            continue;
        };
        let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
        dirs.sort();
        for dir in dirs {
            let meta = read_meta(&dir)?;
            let members = read_archive(&dir.join("archive.csv"))?;
            let best_feasible = meta.best_g.is_some_and(|g| g <= 0.0);
            problem.get_or_insert(meta.problem.clone());
            records.push(RunRecord {
                sharing,
                rep: meta.rep,
                valid: meta.valid,
                best_z: if meta.n_obj == 1 {
                    meta.best_z.as_ref().and_then(|z| z.first().copied())
                } else {
                    None
                },
                best_feasible,
                front: feasible_front(&members),
                dir,
            });
        }
    }
    let Some(problem) = problem else {
        return Err(OutputError::Format {
            path: root.to_path_buf(),
            message: "no run directories found".into(),
        }
        .into());
    };
    summarize(root, &problem, records, Vec::new())
}
