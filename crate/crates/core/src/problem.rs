//! Problem definition: a bounded mixed real/integer domain and a black-box
//! model returning objective values `z` and a scalar constraint measure `g`.
//!
//! A point is feasible when `g <= 0`. Several constraints are folded into a
//! single `g` by the model itself (the benchmark suite uses the maximum
//! residual).

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

/// Errors raised while constructing or checking problem data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("dimension {index}: lower bound {lower} exceeds upper bound {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },
    #[error("dimension {index}: integer dimension has non-integer bound")]
    FractionalIntegerBound { index: usize },
    #[error("dimension {index}: bound is not finite")]
    NonFiniteBound { index: usize },
    #[error("point has {got} values but the domain has {expected} dimensions")]
    WrongLength { expected: usize, got: usize },
    #[error("value {value} at dimension {index} violates the domain")]
    OutOfDomain { index: usize, value: f64 },
    #[error("objective count mismatch: {left} vs {right}")]
    ObjectiveMismatch { left: usize, right: usize },
    #[error("problem must declare at least one objective")]
    NoObjectives,
}

/// Kind of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Real,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dimension {
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

impl Dimension {
    pub fn real(lower: f64, upper: f64) -> Self {
        Dimension {
            lower,
            upper,
            kind: VarKind::Real,
        }
    }

    pub fn integer(lower: f64, upper: f64) -> Self {
        Dimension {
            lower,
            upper,
            kind: VarKind::Integer,
        }
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    /// Clips `value` into the bounds and rounds it when the dimension is
    /// integer-valued.
    pub fn repair(&self, value: f64) -> f64 {
        let v = if value.is_nan() { self.lower } else { value };
        let v = v.clamp(self.lower, self.upper);
        match self.kind {
            VarKind::Real => v,
            VarKind::Integer => v.round().clamp(self.lower, self.upper),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower
            && value <= self.upper
            && (self.kind == VarKind::Real || value == value.round())
    }
}

/// The search domain: one bounded dimension per decision variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domain {
    dims: Vec<Dimension>,
}

impl Domain {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, CoreError> {
        for (index, d) in dims.iter().enumerate() {
            if !d.lower.is_finite() || !d.upper.is_finite() {
                return Err(CoreError::NonFiniteBound { index });
            }
            if d.lower > d.upper {
                return Err(CoreError::InvertedBounds {
                    index,
                    lower: d.lower,
                    upper: d.upper,
                });
            }
            if d.kind == VarKind::Integer
                && (d.lower != d.lower.round() || d.upper != d.upper.round())
            {
                return Err(CoreError::FractionalIntegerBound { index });
            }
        }
        Ok(Domain { dims })
    }

    /// `n` real dimensions sharing the same bounds.
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self, CoreError> {
        Domain::new(vec![Dimension::real(lower, upper); n])
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> &Dimension {
        &self.dims[i]
    }

    /// Builds a point, rejecting values outside the domain.
    pub fn point(&self, values: Vec<f64>) -> Result<Point, CoreError> {
        if values.len() != self.dims.len() {
            return Err(CoreError::WrongLength {
                expected: self.dims.len(),
                got: values.len(),
            });
        }
        for (index, (d, &value)) in self.dims.iter().zip(&values).enumerate() {
            if !d.contains(value) {
                return Err(CoreError::OutOfDomain { index, value });
            }
        }
        Ok(Point(values))
    }

    /// Projects arbitrary values onto the domain: clipping to bounds and
    /// rounding integer dimensions. Missing trailing values take the lower
    /// bound; surplus values are dropped.
    pub fn repair(&self, values: &[f64]) -> Point {
        Point(
            self.dims
                .iter()
                .enumerate()
                .map(|(i, d)| d.repair(values.get(i).copied().unwrap_or(d.lower)))
                .collect(),
        )
    }

    pub fn contains(&self, point: &Point) -> bool {
        point.len() == self.dims.len()
            && self.dims.iter().zip(point.values()).all(|(d, &v)| d.contains(v))
    }

    /// Uniform random point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let values: Vec<f64> = self
            .dims
            .iter()
            .map(|d| {
                if d.range() == 0.0 {
                    d.lower
                } else {
                    d.lower + rng.random::<f64>() * d.range()
                }
            })
            .collect();
        self.repair(&values)
    }

    pub fn ranges(&self) -> Vec<f64> {
        self.dims.iter().map(Dimension::range).collect()
    }
}

/// A decision vector. Integer dimensions carry integer-valued reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point(Vec<f64>);

impl Point {
    /// Wraps raw values without checking them against any domain.
    pub fn new(values: Vec<f64>) -> Self {
        Point(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Black-box model `(z, g) = f(d, parameters)`. Parameters are whatever the
/// implementor captures. Implementations must tolerate concurrent calls.
pub trait Model: Send + Sync {
    fn evaluate(&self, d: &[f64]) -> (Vec<f64>, f64);
}

impl<F> Model for F
where
    F: Fn(&[f64]) -> (Vec<f64>, f64) + Send + Sync,
{
    fn evaluate(&self, d: &[f64]) -> (Vec<f64>, f64) {
        self(d)
    }
}

/// Known single-objective optimum, used only by tests.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub z: f64,
    pub at: Vec<f64>,
}

/// Parametric description of a known bi-objective front, `t` in `[0, 1]`.
pub type FrontFn = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

/// Utopia and reference points for front-quality measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricAnchors {
    pub utopia: [f64; 2],
    pub reference: [f64; 2],
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: Domain,
    pub n_obj: usize,
    pub model: Arc<dyn Model>,
    pub stochastic: bool,
    pub known_optimum: Option<KnownOptimum>,
    pub known_front: Option<FrontFn>,
    pub anchors: Option<MetricAnchors>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dims", &self.domain.len())
            .field("n_obj", &self.n_obj)
            .field("known_optimum", &self.known_optimum)
            .field("has_front", &self.known_front.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        n_obj: usize,
        model: impl Model + 'static,
    ) -> Result<Self, CoreError> {
        if n_obj == 0 {
            return Err(CoreError::NoObjectives);
        }
        Ok(Problem {
            name: name.into(),
            domain,
            n_obj,
            model: Arc::new(model),
            stochastic: false,
            known_optimum: None,
            known_front: None,
            anchors: None,
        })
    }

    pub fn with_optimum(mut self, optimum: KnownOptimum) -> Self {
        self.known_optimum = Some(optimum);
        self
    }

    pub fn with_front(mut self, front: FrontFn) -> Self {
        self.known_front = Some(front);
        self
    }

    pub fn with_anchors(mut self, anchors: MetricAnchors) -> Self {
        self.anchors = Some(anchors);
        self
    }
}

/// Raised when the model produced non-finite output, the wrong number of
/// objectives, or panicked.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation failed: {reason}")]
pub struct EvaluationFailed {
    pub reason: String,
}

/// Raw model output at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub point: Point,
    pub z: Vec<f64>,
    pub g: f64,
}

impl Outcome {
    /// The value every failed evaluation maps to: infeasible at `g = +inf`
    /// with every objective at `+inf`.
    pub fn sentinel(point: Point, n_obj: usize) -> Self {
        Outcome {
            point,
            z: vec![f64::INFINITY; n_obj],
            g: f64::INFINITY,
        }
    }
}

/// Runs the model once. The point is projected onto the domain first, so
/// integer dimensions are rounded here. No caching: every call counts as one
/// function evaluation.
pub fn evaluate_model(problem: &Problem, point: &Point) -> Result<Outcome, EvaluationFailed> {
    let point = problem.domain.repair(point.values());
    let model = &problem.model;
    let (z, g) = panic::catch_unwind(AssertUnwindSafe(|| model.evaluate(point.values())))
        .map_err(|_| EvaluationFailed {
            reason: "model panicked".into(),
        })?;
    if z.len() != problem.n_obj {
        return Err(EvaluationFailed {
            reason: format!("model returned {} objectives, expected {}", z.len(), problem.n_obj),
        });
    }
    if !g.is_finite() || z.iter().any(|v| !v.is_finite()) {
        return Err(EvaluationFailed {
            reason: "non-finite model output".into(),
        });
    }
    Ok(Outcome { point, z, g })
}

/// Like [`evaluate_model`] but maps failures to the sentinel outcome.
pub fn evaluate_or_sentinel(problem: &Problem, point: &Point) -> Outcome {
    evaluate_model(problem, point).unwrap_or_else(|_| {
        Outcome::sentinel(problem.domain.repair(point.values()), problem.n_obj)
    })
}
