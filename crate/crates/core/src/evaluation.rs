//! Evaluated points and the two comparison rules used throughout the system:
//! a feasibility-first total preorder for single-objective problems and a
//! feasibility-layered Pareto dominance for multi-objective ones.

use std::fmt;

use serde::Serialize;

use crate::problem::{CoreError, Outcome, Point};

/// Index of a solver instance within a run's roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SolverId(pub usize);

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "solver-{}", self.0)
    }
}

/// One model evaluation with its attribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub point: Point,
    pub z: Vec<f64>,
    pub g: f64,
    pub solver: SolverId,
    /// Dispatch index, monotone over a run.
    pub seq: u64,
    /// Scheduler message count at the time the evaluation was dispatched.
    pub scheduler_iter: u64,
}

impl Evaluation {
    pub fn from_outcome(outcome: Outcome, solver: SolverId, seq: u64, scheduler_iter: u64) -> Self {
        Evaluation {
            point: outcome.point,
            z: outcome.z,
            g: outcome.g,
            solver,
            seq,
            scheduler_iter,
        }
    }

    pub fn feasible(&self) -> bool {
        self.g <= 0.0
    }

    pub fn n_obj(&self) -> usize {
        self.z.len()
    }

    /// Same objective vector and constraint measure.
    pub fn same_value(&self, other: &Evaluation) -> bool {
        self.g == other.g && self.z == other.z
    }
}

/// Single-objective ordering: feasible beats infeasible, then smaller `z`
/// among feasible points, smaller `g` among infeasible ones. Ties are not
/// better.
pub fn better(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.z[0] < b.z[0],
        (false, false) => a.g < b.g,
    }
}

/// Pareto dominance for minimization, layered by feasibility: a feasible
/// point dominates every infeasible one, and infeasible points compare by
/// `g` alone.
pub fn dominates(a: &Evaluation, b: &Evaluation) -> Result<bool, CoreError> {
    if a.z.len() != b.z.len() {
        return Err(CoreError::ObjectiveMismatch {
            left: a.z.len(),
            right: b.z.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.g < b.g,
        (true, true) => pareto_dominates(&a.z, &b.z),
    }
}

/// Plain componentwise Pareto dominance on objective vectors.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// `better` for one objective, `dominates` otherwise. Objective counts are
/// assumed equal.
pub fn precedes(a: &Evaluation, b: &Evaluation) -> bool {
    if a.z.len() == 1 {
        better(a, b)
    } else {
        dominates_unchecked(a, b)
    }
}

#[cfg(test)]
pub(crate) fn eval(z: &[f64], g: f64) -> Evaluation {
    Evaluation {
        point: Point::new(vec![]),
        z: z.to_vec(),
        g,
        solver: SolverId(0),
        seq: 0,
        scheduler_iter: 0,
    }
}
