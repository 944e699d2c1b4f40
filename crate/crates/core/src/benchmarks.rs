//! Named benchmark problems. Names take a dimension suffix, e.g.
//! `rastrigin-10`; `false-readings-analogue` defaults to four variables.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::problem::{Dimension, Domain, KnownOptimum, MetricAnchors, Problem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    Unknown { name: String, available: Vec<String> },
    #[error("problem `{0}` needs a positive dimension suffix")]
    BadDimension(String),
    #[error("problem `{0}` has no known front")]
    NoFront(String),
    #[error("at least one front sample is required")]
    NoSamples,
}

/// Registered names, with `<n>` standing for the dimension.
pub const AVAILABLE: &[&str] = &[
    "sphere-<n>",
    "constrained-sphere-<n>",
    "rosenbrock-<n>",
    "rastrigin-<n>",
    "mixed-int-quadratic-<n>",
    "ridge-basin-<n>",
    "biobj-quadratic-<n>",
    "false-readings-analogue[-<n>]",
];

const FALSE_READINGS_DEFAULT_N: usize = 4;
const READING_SAMPLES: usize = 20;

fn unknown(name: &str) -> ProblemError {
    ProblemError::Unknown {
        name: name.to_string(),
        available: AVAILABLE.iter().map(|s| s.to_string()).collect(),
    }
}

fn split(name: &str) -> Option<(&str, Option<&str>)> {
    let bases = [
        "constrained-sphere",
        "sphere",
        "rosenbrock",
        "rastrigin",
        "mixed-int-quadratic",
        "ridge-basin",
        "biobj-quadratic",
        "false-readings-analogue",
    ];
    for base in bases {
        if name == base {
            return Some((base, None));
        }
        if let Some(rest) = name.strip_prefix(base).and_then(|r| r.strip_prefix('-')) {
            return Some((base, Some(rest)));
        }
    }
    None
}

fn real_box(n: usize, l: f64, u: f64) -> Domain {
    Domain::uniform(n, l, u).expect("static bounds are valid")
}

fn build(name: &str, domain: Domain, n_obj: usize, model: impl Fn(&[f64]) -> (Vec<f64>, f64) + Send + Sync + 'static) -> Problem {
    Problem::new(name, domain, n_obj, model).expect("at least one objective")
}

fn rastrigin(d: &[f64]) -> f64 {
    10.0 * d.len() as f64 + d.iter().map(|x| x * x - 10.0 * (2.0 * PI * x).cos()).sum::<f64>()
}

/// Per-coordinate term of ridge-basin and its minimizer near the origin.
fn ridge_term(x: f64) -> f64 {
    10.0 + x * x - 10.0 * (2.0 * PI * x).cos() + 0.5 * (x - 0.25) * (x - 0.25)
}

fn ridge_minimizer() -> f64 {
    // Newton on the derivative, from the origin basin
    let mut x = 0.0f64;
    for _ in 0..50 {
        let d1 = 3.0 * x + 20.0 * PI * (2.0 * PI * x).sin() - 0.25;
        let d2 = 3.0 + 40.0 * PI * PI * (2.0 * PI * x).cos();
        x -= d1 / d2;
    }
    x
}

/// Synthetic readings: `z1` is a cost, `z2 = n_f + n_p / 1000` counts
/// missed and spurious detections over a fixed set of samples for a
/// threshold driven by the design.
pub fn false_readings(d: &[f64]) -> (Vec<f64>, f64) {
    let n = d.len().max(1) as f64;
    let z1 = d.iter().map(|x| x * x).sum::<f64>() / n;
    let threshold = 1.0 - d.iter().sum::<f64>() / n;
    let mut n_f = 0u32;
    let mut n_p = 0u32;
    for k in 0..READING_SAMPLES {
        let s = (k as f64 + 0.5) / READING_SAMPLES as f64;
        let present = s > 0.5;
        if present && s < threshold {
            n_f += 1;
        } else if !present && s >= threshold {
            n_p += 1;
        }
    }
    (vec![z1, n_f as f64 + n_p as f64 / 1000.0], -1.0)
}

/// Builds a registered problem.
pub fn registry_get(name: &str) -> Result<Problem, ProblemError> {
    let (base, suffix) = split(name).ok_or_else(|| unknown(name))?;
    let n = match (base, suffix) {
        ("false-readings-analogue", None) => FALSE_READINGS_DEFAULT_N,
        (_, None) => return Err(ProblemError::BadDimension(name.to_string())),
        (_, Some(s)) => match s.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(ProblemError::BadDimension(name.to_string())),
        },
    };
    let nf = n as f64;
    let p = match base {
        "sphere" => build(name, real_box(n, -5.0, 5.0), 1, |d| (vec![d.iter().map(|x| x * x).sum()], -1.0))
            .with_optimum(KnownOptimum {
                z: 0.0,
                at: vec![0.0; n],
            }),
        "constrained-sphere" => build(name, real_box(n, -5.0, 5.0), 1, |d| {
            (vec![d.iter().map(|x| x * x).sum()], 1.0 - d.iter().sum::<f64>())
        })
        .with_optimum(KnownOptimum {
            z: 1.0 / nf,
            at: vec![1.0 / nf; n],
        }),
        "rosenbrock" => build(name, real_box(n, -2.0, 2.0), 1, |d| {
            let z = d
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum();
            (vec![z], -1.0)
        })
        .with_optimum(KnownOptimum {
            z: 0.0,
            at: vec![1.0; n],
        }),
        "rastrigin" => build(name, real_box(n, -5.12, 5.12), 1, |d| (vec![rastrigin(d)], -1.0))
            .with_optimum(KnownOptimum {
                z: 0.0,
                at: vec![0.0; n],
            }),
        "mixed-int-quadratic" => {
            // even positions are integer with target 0.5, odd ones real with
            // target 2: integrality leaves 0.25 on each integer coordinate
            let dims = (0..n)
                .map(|i| {
                    if i % 2 == 0 {
                        Dimension::integer(-5.0, 5.0)
                    } else {
                        Dimension::real(-5.0, 5.0)
                    }
                })
                .collect();
            let c: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.5 } else { 2.0 }).collect();
            let at = (0..n).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }).collect();
            let target = c.clone();
            build(name, Domain::new(dims).expect("static bounds are valid"), 1, move |d| {
                (vec![d.iter().zip(&target).map(|(x, c)| (x - c) * (x - c)).sum()], -1.0)
            })
            .with_optimum(KnownOptimum {
                z: 0.25 * n.div_ceil(2) as f64,
                at,
            })
        }
        "ridge-basin" => {
            let x = ridge_minimizer();
            build(name, real_box(n, -5.12, 5.12), 1, |d| {
                let well: f64 = d.iter().map(|x| (x - 0.25) * (x - 0.25)).sum();
                (vec![rastrigin(d) + 0.5 * well], -1.0)
            })
            .with_optimum(KnownOptimum {
                z: nf * ridge_term(x),
                at: vec![x; n],
            })
        }
        "biobj-quadratic" => build(name, real_box(n, -5.0, 5.0), 2, |d| {
            (
                vec![
                    d.iter().map(|x| x * x).sum(),
                    d.iter().map(|x| (x - 1.0) * (x - 1.0)).sum(),
                ],
                -1.0,
            )
        })
        .with_front(Arc::new(move |t| [nf * t * t, nf * (t - 1.0) * (t - 1.0)]))
        .with_anchors(MetricAnchors {
            utopia: [0.0, 0.0],
            reference: [nf, nf],
        }),
        "false-readings-analogue" => build(name, real_box(n, 0.0, 1.0), 2, false_readings).with_anchors(
            MetricAnchors {
                utopia: [0.0, 0.0],
                reference: [1.0, READING_SAMPLES as f64 / 2.0 + 0.01],
            },
        ),
        _ => return Err(unknown(name)),
    };
    Ok(p)
}

/// `k` points of the known front at evenly spaced parameters; a single
/// sample sits at the midpoint.
pub fn front_samples(name: &str, k: usize) -> Result<Vec<[f64; 2]>, ProblemError> {
    let p = registry_get(name)?;
    problem_front_samples(&p, k)
}

pub fn problem_front_samples(p: &Problem, k: usize) -> Result<Vec<[f64; 2]>, ProblemError> {
    let front = p.known_front.as_ref().ok_or_else(|| ProblemError::NoFront(p.name.clone()))?;
    match k {
        0 => Err(ProblemError::NoSamples),
        1 => Ok(vec![front(0.5)]),
        _ => Ok((0..k).map(|j| front(j as f64 / (k - 1) as f64)).collect()),
    }
}
