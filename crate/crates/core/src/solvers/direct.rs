//! Direct search: steepest descent on finite-difference gradients and
//! coordinate search, both restarted from a last-in first-out list of
//! starting points.

use rand::Rng;

use crate::evaluation::Evaluation;
use crate::problem::{Domain, Point, VarKind};
use crate::events::Event;

use super::fitness::penalized;
use super::{Objective, OperatorParams, SolverConfig, SolverContext, SolverKind, Terminated};

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub components: Vec<f64>,
    /// Components zeroed because a stencil value was not finite.
    pub flagged: Vec<usize>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Central differences per real dimension. Near a bound the stencil is
/// clipped into the box and the divisor shrinks to match; integer
/// dimensions get zero.
pub fn finite_difference_gradient<F>(
    f: &mut F,
    d: &Point,
    h: f64,
    domain: &Domain,
) -> Result<Gradient, Terminated>
where
    F: FnMut(&Point) -> Result<f64, Terminated>,
{
    let mut components = vec![0.0; d.len()];
    let mut flagged = Vec::new();
    for (i, dim) in domain.dims().iter().enumerate() {
        if dim.kind == VarKind::Integer {
            continue;
        }
        let x = d.values()[i];
        let hi = (x + h).min(dim.upper);
        let lo = (x - h).max(dim.lower);
        if hi <= lo {
            continue;
        }
        let mut v = d.values().to_vec();
        v[i] = hi;
        let fh = f(&Point::new(v.clone()))?;
        v[i] = lo;
        let fl = f(&Point::new(v))?;
        let g = (fh - fl) / (hi - lo);
        if g.is_finite() {
            components[i] = g;
        } else {
            flagged.push(i);
        }
    }
    Ok(Gradient {
        components,
        flagged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineResult {
    pub point: Point,
    pub value: f64,
    pub improved: bool,
}

/// Vertex of the parabola through three points, if it is a minimum.
fn parabola_vertex((a, fa): (f64, f64), (b, fb): (f64, f64), (c, fc): (f64, f64)) -> Option<f64> {
    let p = (b - a) * (fb - fc);
    let q = (b - c) * (fb - fa);
    let den = p - q;
    let num = (b - a) * p - (b - c) * q;
    let v = b - 0.5 * num / den;
    (den.abs() > 0.0 && v.is_finite() && v > a.min(c) && v < a.max(c)).then_some(v)
}

/// Backtracking search from `d` along `direction` (normalized internally).
/// The first step is `initial_step` of the smallest range among the moving
/// coordinates; it is halved until the value drops, or doubled while it
/// keeps dropping if the first step already succeeded. A final parabolic
/// fit through the last bracket is tried once. Returns `d` itself when
/// nothing improves.
pub fn line_search<F>(
    f: &mut F,
    d: &Point,
    f0: f64,
    direction: &[f64],
    domain: &Domain,
    params: &OperatorParams,
) -> Result<LineResult, Terminated>
where
    F: FnMut(&Point) -> Result<f64, Terminated>,
{
    let unchanged = LineResult {
        point: d.clone(),
        value: f0,
        improved: false,
    };
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Ok(unchanged);
    }
    let u: Vec<f64> = direction.iter().map(|v| v / norm).collect();
    let min_range = domain
        .dims()
        .iter()
        .zip(&u)
        .filter(|(_, &ui)| ui != 0.0)
        .map(|(dim, _)| dim.range())
        .fold(f64::INFINITY, f64::min);
    if !(min_range > 0.0 && min_range.is_finite()) {
        return Ok(unchanged);
    }
    let at = |alpha: f64| -> (Point, f64) {
        let v: Vec<f64> = d.values().iter().zip(&u).map(|(x, ui)| x + alpha * ui).collect();
        let p = domain.repair(&v);
        // effective step after clipping, measured along the ray
        let t = p
            .values()
            .iter()
            .zip(d.values())
            .zip(&u)
            .map(|((y, x), ui)| (y - x) * ui)
            .sum();
        (p, t)
    };

    let mut alpha = params.initial_step * min_range;
    let (p, t) = at(alpha);
    if p == *d {
        return Ok(unchanged);
    }
    let fv = f(&p)?;
    // bracket: (lower, best, upper) as (t, value) pairs
    let (mut best, mut best_t, mut best_v);
    let (lower, upper);
    if fv < f0 {
        best = p;
        best_t = t;
        best_v = fv;
        let mut prev = (0.0, f0);
        let mut next = None;
        for _ in 0..40 {
            alpha *= 2.0;
            let (q, tq) = at(alpha);
            if q == best {
                break;
            }
            let fq = f(&q)?;
            if fq < best_v {
                prev = (best_t, best_v);
                best = q;
                best_t = tq;
                best_v = fq;
            } else {
                next = Some((tq, fq));
                break;
            }
        }
        lower = prev;
        upper = next;
    } else {
        let mut above = (t, fv);
        let mut found = None;
        for _ in 0..params.max_halvings {
            alpha *= 0.5;
            let (q, tq) = at(alpha);
            if q == *d {
                break;
            }
            let fq = f(&q)?;
            if fq < f0 {
                found = Some((q, tq, fq));
                break;
            }
            above = (tq, fq);
        }
        let Some((q, tq, fq)) = found else {
            return Ok(unchanged);
        };
        best = q;
        best_t = tq;
        best_v = fq;
        lower = (0.0, f0);
        upper = Some(above);
    }
    if let Some(up) = upper {
        if let Some(v) = parabola_vertex(lower, (best_t, best_v), up) {
            let (q, _) = at(v);
            if q != best {
                let fq = f(&q)?;
                if fq < best_v {
                    best = q;
                    best_v = fq;
                }
            }
        }
    }
    Ok(LineResult {
        point: best,
        value: best_v,
        improved: true,
    })
}

/// Integer coordinate search on dimension `i`: offsets `+1, +2, +4, ...`
/// while they improve, then the negative side if the positive one did not.
pub fn integer_search<F>(
    f: &mut F,
    d: &Point,
    f0: f64,
    i: usize,
    domain: &Domain,
) -> Result<LineResult, Terminated>
where
    F: FnMut(&Point) -> Result<f64, Terminated>,
{
    let mut best = d.clone();
    let mut best_v = f0;
    for sign in [1.0, -1.0] {
        let mut step = 1.0;
        let mut moved = false;
        loop {
            let mut v = d.values().to_vec();
            v[i] += sign * step;
            let q = domain.repair(&v);
            if q == best || q == *d {
                break;
            }
            let fq = f(&q)?;
            if fq < best_v {
                best = q;
                best_v = fq;
                moved = true;
                step *= 2.0;
            } else {
                break;
            }
        }
        if moved {
            break;
        }
    }
    Ok(LineResult {
        improved: best_v < f0,
        point: best,
        value: best_v,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub point: Point,
    pub value: f64,
    pub iterations: usize,
    /// Gradient components that had to be zeroed, in order of occurrence.
    pub warnings: Vec<usize>,
}

/// Steepest descent from `start`. Stops when a step is shorter than the
/// tolerance, when the line search cannot improve, or after the iteration
/// cap. `hook` runs once per iteration.
pub fn steepest_descent<F, H>(
    f: &mut F,
    start: Point,
    f0: f64,
    domain: &Domain,
    params: &OperatorParams,
    mut hook: H,
) -> Result<DescentOutcome, Terminated>
where
    F: FnMut(&Point) -> Result<f64, Terminated>,
    H: FnMut(),
{
    let mut x = start;
    let mut fx = f0;
    let mut warnings = Vec::new();
    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        hook();
        let g = finite_difference_gradient(f, &x, params.fd_step, domain)?;
        warnings.extend(&g.flagged);
        // drop components that would push through an active bound
        let dir: Vec<f64> = g
            .components
            .iter()
            .zip(x.values())
            .zip(domain.dims())
            .map(|((&gi, &xi), dim)| {
                let di = -gi;
                if (di < 0.0 && xi <= dim.lower) || (di > 0.0 && xi >= dim.upper) {
                    0.0
                } else {
                    di
                }
            })
            .collect();
        let step = line_search(f, &x, fx, &dir, domain, params)?;
        if !step.improved {
            break;
        }
        let moved = step.point.distance(&x);
        x = step.point;
        fx = step.value;
        if moved < params.step_tolerance {
            break;
        }
    }
    Ok(DescentOutcome {
        point: x,
        value: fx,
        iterations,
        warnings,
    })
}

/// Coordinate search from `start`: each sweep visits every dimension,
/// searching the positive then the negative axis direction. Stops after a
/// sweep without improvement or at the sweep cap.
pub fn coordinate_descent<F, H>(
    f: &mut F,
    start: Point,
    f0: f64,
    domain: &Domain,
    params: &OperatorParams,
    mut hook: H,
) -> Result<DescentOutcome, Terminated>
where
    F: FnMut(&Point) -> Result<f64, Terminated>,
    H: FnMut(),
{
    let mut x = start;
    let mut fx = f0;
    let mut sweeps = 0;
    while sweeps < params.max_iterations {
        sweeps += 1;
        hook();
        let mut improved = false;
        for (i, dim) in domain.dims().iter().enumerate() {
            let r = if dim.kind == VarKind::Integer {
                integer_search(f, &x, fx, i, domain)?
            } else {
                let mut e = vec![0.0; domain.len()];
                e[i] = 1.0;
                let up = line_search(f, &x, fx, &e, domain, params)?;
                if up.improved {
                    up
                } else {
                    e[i] = -1.0;
                    line_search(f, &x, fx, &e, domain, params)?
                }
            };
            if r.improved {
                improved = true;
                x = r.point;
                fx = r.value;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(DescentOutcome {
        point: x,
        value: fx,
        iterations: sweeps,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Start {
    pub point: Point,
    /// Known value, for shared solutions that arrive already evaluated.
    pub value: Option<f64>,
    pub shared: bool,
}

/// Last-in first-out list of descent starting points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StartStack {
    items: Vec<Start>,
}

impl StartStack {
    /// The first point of `initial` is the first one popped.
    pub fn new(initial: &[Point]) -> Self {
        StartStack {
            items: initial
                .iter()
                .rev()
                .map(|p| Start {
                    point: p.clone(),
                    value: None,
                    shared: false,
                })
                .collect(),
        }
    }

    pub fn push(&mut self, start: Start) {
        self.items.push(start);
    }

    pub fn pop(&mut self) -> Option<Start> {
        self.items.pop()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn push_shared(
    stack: &mut StartStack,
    shared: Vec<Evaluation>,
    value: impl Fn(&Evaluation) -> f64,
    ctx: &SolverContext,
) {
    let before = stack.len();
    let n = shared.len();
    for e in shared {
        stack.push(Start {
            value: Some(value(&e)),
            point: e.point,
            shared: true,
        });
    }
    ctx.injection(n, before, stack.len());
}

/// Multi-start driver for SD and CS. Runs until the objective terminates;
/// an exhausted start list is refilled with a uniformly random point.
pub fn run_direct<O: Objective, R: Rng + ?Sized>(
    cfg: &SolverConfig,
    ctx: &SolverContext,
    initial: &[Point],
    objective: &mut O,
    rng: &mut R,
) -> Result<(), Terminated> {
    let (omega, penalty) = (cfg.omega, cfg.params.penalty);
    let value = |e: &Evaluation| penalized(e, omega, penalty);
    let mut stack = StartStack::new(initial);
    let mut f = |p: &Point| objective.evaluate(p).map(|e| value(&e));
    loop {
        push_shared(&mut stack, ctx.shared(), value, ctx);
        let start = stack.pop().unwrap_or_else(|| Start {
            point: ctx.domain.sample(rng),
            value: None,
            shared: false,
        });
        ctx.events.emit(Event::DescentStart {
            solver: ctx.id.0,
            shared: start.shared,
            pending_starts: stack.len(),
        });
        let f0 = match start.value {
            Some(v) => v,
            None => f(&start.point)?,
        };
        let hook = || push_shared(&mut stack, ctx.shared(), value, ctx);
        let outcome = match cfg.kind {
            SolverKind::Cs => coordinate_descent(&mut f, start.point, f0, &ctx.domain, &cfg.params, hook)?,
            _ => steepest_descent(&mut f, start.point, f0, &ctx.domain, &cfg.params, hook)?,
        };
        for component in outcome.warnings {
            ctx.events.emit(Event::GradientWarning {
                solver: ctx.id.0,
                component,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::SolverId;
    use crate::events::EventLog;
    use crate::messaging::{AgentId, Body, Mailbox, Message};
    use crate::problem::Dimension;
    use crate::solvers::testing::sphere;
    use crate::solvers::DirectObjective;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pure(g: impl Fn(&[f64]) -> f64) -> impl FnMut(&Point) -> Result<f64, Terminated> {
        move |p: &Point| Ok(g(p.values()))
    }

    fn counted<'a>(
        g: impl Fn(&[f64]) -> f64 + 'a,
        n: &'a mut usize,
    ) -> impl FnMut(&Point) -> Result<f64, Terminated> + 'a {
        move |p: &Point| {
            *n += 1;
            Ok(g(p.values()))
        }
    }

    fn box_(n: usize, l: f64, u: f64) -> Domain {
        Domain::uniform(n, l, u).unwrap()
    }

    fn params() -> OperatorParams {
        OperatorParams::default()
    }

    #[test]
    fn gradient_of_square() {
        let mut f = pure(|x| x[0] * x[0]);
        let g = finite_difference_gradient(&mut f, &Point::new(vec![1.0]), 1e-6, &box_(1, -5.0, 5.0))
            .unwrap();
        assert!((g.components[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn gradient_of_linear() {
        let mut f = pure(|x| x[0] + 2.0 * x[1]);
        let g = finite_difference_gradient(&mut f, &Point::new(vec![0.3, -0.7]), 1e-6, &box_(2, -5.0, 5.0))
            .unwrap();
        assert!((g.components[0] - 1.0).abs() < 1e-6);
        assert!((g.components[1] - 2.0).abs() < 1e-6);
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn gradient_vanishes_at_rosenbrock_minimum() {
        let mut f = pure(rosenbrock);
        let g = finite_difference_gradient(&mut f, &Point::new(vec![1.0, 1.0]), 1e-6, &box_(2, -5.0, 5.0))
            .unwrap();
        assert!(g.norm() < 1e-4, "{:?}", g.components);
    }

    #[test]
    fn gradient_flags_non_finite_stencils() {
        let mut f = pure(|x| if x[0] > 0.0 { f64::NAN } else { x[1] });
        let g = finite_difference_gradient(&mut f, &Point::new(vec![0.0, 0.0]), 1e-6, &box_(2, -1.0, 1.0))
            .unwrap();
        assert_eq!(g.components[0], 0.0);
        assert_eq!(g.flagged, vec![0]);
    }

    #[test]
    fn gradient_at_bound_and_on_integer_dims() {
        let domain = Domain::new(vec![Dimension::real(0.0, 1.0), Dimension::integer(0.0, 9.0)]).unwrap();
        let mut f = pure(|x| 3.0 * x[0] + x[1] * x[1]);
        let g = finite_difference_gradient(&mut f, &Point::new(vec![0.0, 4.0]), 1e-6, &domain).unwrap();
        assert!((g.components[0] - 3.0).abs() < 1e-6);
        assert_eq!(g.components[1], 0.0);
    }

    #[test]
    fn line_search_descends_convex() {
        let mut f = pure(|x| x[0] * x[0]);
        let r = line_search(&mut f, &Point::new(vec![4.0]), 16.0, &[-1.0], &box_(1, -5.0, 5.0), &params())
            .unwrap();
        assert!(r.improved);
        assert!(r.value < 16.0);
    }

    #[test]
    fn line_search_uphill_returns_input() {
        let mut f = pure(|x| x[0]);
        let d = Point::new(vec![0.0]);
        let r = line_search(&mut f, &d, 0.0, &[1.0], &box_(1, -5.0, 5.0), &params()).unwrap();
        assert!(!r.improved);
        assert_eq!(r.point, d);
        assert_eq!(r.value, 0.0);
    }

    /// Golden-section minimizer over `[a, b]`.
    fn golden(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if g(c) < g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        (a + b) / 2.0
    }

    #[test]
    fn line_search_matches_ray_minimum() {
        let q = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2) + 0.5 * x[0] * x[1];
        let d = [0.0, 0.0];
        let dir = [0.6, -0.2];
        let norm = (0.36f64 + 0.04).sqrt();
        let on_ray = |t: f64| q(&[d[0] + t * dir[0] / norm, d[1] + t * dir[1] / norm]);
        let t_star = golden(on_ray, 0.0, 10.0);
        // the minimum lies inside the first trial step (0.1 * range = 1)
        assert!(t_star < 1.0);
        let mut f = pure(q);
        let r = line_search(&mut f, &Point::new(d.to_vec()), q(&d), &dir, &box_(2, -5.0, 5.0), &params())
            .unwrap();
        assert!((r.value - on_ray(t_star)).abs() < 1e-2);
    }

    #[test]
    fn line_search_keeps_points_in_the_box() {
        let domain = box_(2, 0.0, 1.0);
        let mut f = pure(|x| -(x[0] + x[1]));
        let r = line_search(&mut f, &Point::new(vec![0.5, 0.5]), -1.0, &[1.0, 1.0], &domain, &params()).unwrap();
        assert!(domain.contains(&r.point));
        assert_eq!(r.point.values(), &[1.0, 1.0]);
    }

    #[test]
    fn integer_search_uses_doubling_offsets() {
        let domain = Domain::new(vec![Dimension::integer(-20.0, 20.0)]).unwrap();
        let mut n = 0;
        let mut f = counted(|x| (x[0] - 7.0).abs(), &mut n);
        let r = integer_search(&mut f, &Point::new(vec![0.0]), 7.0, 0, &domain).unwrap();
        drop(f);
        // +1, +2, +4, +8 improve, +16 does not
        assert_eq!(r.point.values(), &[8.0]);
        assert_eq!(n, 5);
    }

    #[test]
    fn sd_converges_on_convex_quadratic() {
        let q = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 0.5 * (x[2] - 2.0).powi(2);
        let mut f = pure(q);
        let start = Point::new(vec![-3.0, 3.0, 0.0]);
        let f0 = q(start.values());
        let out = steepest_descent(&mut f, start, f0, &box_(3, -5.0, 5.0), &params(), || {}).unwrap();
        let target = Point::new(vec![1.0, -0.5, 2.0]);
        assert!(out.point.distance(&target) < 1e-4, "{}", out.point);
    }

    #[test]
    fn sd_at_optimum_stops_in_one_iteration() {
        let q = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let mut f = pure(q);
        let out = steepest_descent(&mut f, Point::new(vec![0.0, 0.0]), 0.0, &box_(2, -5.0, 5.0), &params(), || {})
            .unwrap();
        assert!(out.iterations <= 1);
        assert_eq!(out.point.values(), &[0.0, 0.0]);
    }

    #[test]
    fn cs_solves_separable_quadratic_within_n_sweeps() {
        let n = 4;
        let target = [1.0, -2.0, 0.5, 3.0];
        let q = |x: &[f64]| {
            x.iter()
                .zip(&target)
                .enumerate()
                .map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2))
                .sum()
        };
        let mut f = pure(q);
        let start = Point::new(vec![0.0; n]);
        let f0 = q(start.values());
        let p = OperatorParams {
            max_iterations: n,
            ..params()
        };
        let out = coordinate_descent(&mut f, start, f0, &box_(n, -5.0, 5.0), &p, || {}).unwrap();
        assert!(out.point.distance(&Point::new(target.to_vec())) < 1e-4, "{}", out.point);
    }

    #[test]
    fn cs_at_optimum_does_one_sweep_without_moving() {
        let mut f = pure(|x| x[0] * x[0] + x[1] * x[1]);
        let start = Point::new(vec![0.0, 0.0]);
        let out = coordinate_descent(&mut f, start.clone(), 0.0, &box_(2, -5.0, 5.0), &params(), || {}).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.point, start);
    }

    #[test]
    fn cs_on_ridge_needs_several_sweeps() {
        let ridge = |x: &[f64]| (x[0] - x[1]).powi(2) + 0.01 * x[0] * x[0];
        let domain = box_(2, -2.0, 2.0);
        // exact coordinate minimization: x <- y / 1.01, then y <- x
        let mut y = 1.0f64;
        let mut oracle = Vec::new();
        for _ in 0..3 {
            let x = y / 1.01;
            y = x;
            oracle.push(ridge(&[x, y]));
        }
        let one = OperatorParams {
            max_iterations: 1,
            ..params()
        };
        let mut f = pure(ridge);
        let after_one = coordinate_descent(&mut f, Point::new(vec![1.0, 1.0]), 0.01, &domain, &one, || {}).unwrap();
        assert!(after_one.value < 0.01);
        assert!((after_one.value - oracle[0]).abs() < 1e-6);
        let three = OperatorParams {
            max_iterations: 3,
            ..params()
        };
        let after_three =
            coordinate_descent(&mut f, Point::new(vec![1.0, 1.0]), 0.01, &domain, &three, || {}).unwrap();
        assert_eq!(after_three.iterations, 3);
        assert!(after_three.value < after_one.value);
        assert!((after_three.value - oracle[2]).abs() < 1e-6);
        // far from the minimum at the origin after a few sweeps
        assert!(after_three.value > 1e-3);
    }

    #[test]
    fn stack_is_lifo_with_first_initial_on_top() {
        let a = Point::new(vec![1.0]);
        let b = Point::new(vec![2.0]);
        let s = Point::new(vec![3.0]);
        let mut st = StartStack::new(&[a.clone(), b.clone()]);
        assert_eq!(st.pop().unwrap().point, a);
        st.push(Start {
            point: s.clone(),
            value: Some(9.0),
            shared: true,
        });
        assert_eq!(st.pop().unwrap().point, s);
        assert_eq!(st.pop().unwrap().point, b);
        assert!(st.pop().is_none());
    }

    #[test]
    fn shared_best_is_the_next_start() {
        let p = sphere(2);
        let inbox = Mailbox::new(4);
        let shared = Evaluation {
            point: Point::new(vec![0.1, 0.1]),
            z: vec![0.02],
            g: -1.0,
            solver: SolverId(1),
            seq: 5,
            scheduler_iter: 5,
        };
        inbox
            .put(Message::new(AgentId::Scheduler, Body::ShareBest(shared)))
            .unwrap();
        let events = EventLog::new();
        let ctx = SolverContext {
            inbox: Some(inbox),
            events: events.clone(),
            ..SolverContext::new(SolverId(0), p.domain.clone())
        };
        let mut obj = DirectObjective::new(p.clone()).with_limit(200);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = SolverConfig::new(SolverKind::Sd, 0);
        let init = vec![Point::new(vec![4.0, 4.0])];
        assert!(run_direct(&cfg, &ctx, &init, &mut obj, &mut rng).is_err());
        let starts: Vec<bool> = events
            .snapshot()
            .into_iter()
            .filter_map(|e| match e {
                Event::DescentStart { shared, .. } => Some(shared),
                _ => None,
            })
            .collect();
        assert!(starts[0]);
        assert!(!starts[1]);
        assert!(events.snapshot().iter().any(|e| matches!(
            e,
            Event::Injection { received: 1, size_before: 1, size_after: 2, .. }
        )));
    }

    #[test]
    fn penalty_pulls_toward_feasibility() {
        // minimize x subject to x >= 1, expressed as g = 1 - x
        let domain = box_(1, -5.0, 5.0);
        let mut f = pure(|x| penalized(
            &Evaluation {
                point: Point::new(x.to_vec()),
                z: vec![x[0]],
                g: 1.0 - x[0],
                solver: SolverId(0),
                seq: 0,
                scheduler_iter: 0,
            },
            0.5,
            1e3,
        ));
        let start = Point::new(vec![4.0]);
        let f0 = f(&start).unwrap();
        let out = coordinate_descent(&mut f, start, f0, &domain, &params(), || {}).unwrap();
        assert!((out.point.values()[0] - 1.0).abs() < 1e-3, "{}", out.point);
    }
}
