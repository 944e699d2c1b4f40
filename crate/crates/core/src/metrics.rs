//! Quality measures for bi-objective solution sets (minimization).

use thiserror::Error;

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("{0} must not be empty")]
    Empty(&'static str),
}

/// A solution set together with whatever anchors are known for it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrontSet {
    pub points: Vec<Point2>,
    pub reference: Option<Point2>,
    pub utopia: Option<Point2>,
    pub true_front: Option<Vec<Point2>>,
}

fn sorted(points: &[Point2]) -> Vec<Point2> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    v
}

/// Area dominated by `points` and bounded by `reference`. Points outside the
/// reference box are ignored.
pub fn hypervolume(points: &[Point2], reference: Point2) -> f64 {
    let inside: Vec<Point2> = points
        .iter()
        .copied()
        .filter(|p| p[0] <= reference[0] && p[1] <= reference[1])
        .collect();
    let mut staircase: Vec<Point2> = Vec::new();
    for p in sorted(&inside) {
        if staircase.last().is_none_or(|q| p[1] < q[1]) {
            staircase.push(p);
        }
    }
    let mut area = 0.0;
    for (i, p) in staircase.iter().enumerate() {
        let next_x = staircase.get(i + 1).map_or(reference[0], |q| q[0]);
        area += (next_x - p[0]) * (reference[1] - p[1]);
    }
    area
}

/// Area of the reference box not dominated by the set; lower is better.
pub fn hypervolume_complement(points: &[Point2], reference: Point2, utopia: Point2) -> f64 {
    (reference[0] - utopia[0]) * (reference[1] - utopia[1]) - hypervolume(points, reference)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub value: f64,
    /// Fewer than two points: the value is 0 and carries no information.
    pub degenerate: bool,
}

/// Trapezoidal-rule area under the points sorted by the first objective.
pub fn area_trapezoid(points: &[Point2]) -> Area {
    if points.len() < 2 {
        return Area {
            value: 0.0,
            degenerate: true,
        };
    }
    let s = sorted(points);
    let value = s
        .windows(2)
        .map(|w| 0.5 * (w[0][1] + w[1][1]) * (w[1][0] - w[0][0]))
        .sum();
    Area {
        value,
        degenerate: false,
    }
}

fn dist(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Mean Euclidean distance to the utopia point.
pub fn average_distance(points: &[Point2], utopia: Point2) -> Result<f64, MetricError> {
    if points.is_empty() {
        return Err(MetricError::Empty("point set"));
    }
    Ok(points.iter().map(|&p| dist(p, utopia)).sum::<f64>() / points.len() as f64)
}

/// Mean distance from each point to its nearest neighbour on the front.
pub fn generational_distance(points: &[Point2], true_front: &[Point2]) -> Result<f64, MetricError> {
    if points.is_empty() {
        return Err(MetricError::Empty("point set"));
    }
    if true_front.is_empty() {
        return Err(MetricError::Empty("true front"));
    }
    let total: f64 = points
        .iter()
        .map(|&p| {
            true_front
                .iter()
                .map(|&q| dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / points.len() as f64)
}
