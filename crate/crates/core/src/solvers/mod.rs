//! Solver agents.
//!
//! Three meta-heuristics (genetic algorithm, plant propagation, particle
//! swarm) and two direct-search methods (steepest descent with
//! finite-difference gradients, coordinate search). Each solver only sees an
//! [`Objective`]; inside the agent system that is a [`Proxy`] routing every
//! evaluation through the scheduler. Shared best solutions arrive in the
//! solver's share inbox and each method applies its own injection policy.

mod direct;
mod fitness;
mod ga;
mod ppa;
mod pso;

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{Archive, ArchiveMode};
use crate::evaluation::{Evaluation, SolverId};
use crate::events::{Event, EventLog};
use crate::messaging::{reply_box, AgentId, Body, Mailbox, Message, PointRequest};
use crate::problem::{evaluate_or_sentinel, Domain, Point, Problem};
use crate::scheduler::Priority;

pub use direct::{
    coordinate_descent, finite_difference_gradient, integer_search, line_search, run_direct,
    steepest_descent, DescentOutcome, Gradient, LineResult, StartStack,
};
pub use fitness::{assign_fitness, best_first, penalized, ranks, scalarize};
pub use ga::{arithmetic_crossover, ga_step, gaussian_mutation, tournament};
pub use ppa::{ppa_step, propagate, runner_count};
pub use pso::{pso_init, pso_step, Particle, Swarm};

/// The solver was told to stop: its proxy hit a closed mailbox or its
/// evaluation allowance is spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("solver terminated")]
pub struct Terminated;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("scalarization needs exactly two objectives, got {0}")]
    NotBiObjective(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolverKind {
    Ga,
    Ppa,
    Pso,
    Sd,
    Cs,
}

/// Meta-heuristic or direct search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolverClass {
    Mh,
    Ds,
}

impl fmt::Display for SolverClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverClass::Mh => "MH",
            SolverClass::Ds => "DS",
        })
    }
}

impl SolverKind {
    pub fn class(self) -> SolverClass {
        match self {
            SolverKind::Ga | SolverKind::Ppa | SolverKind::Pso => SolverClass::Mh,
            SolverKind::Sd | SolverKind::Cs => SolverClass::Ds,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ga => "GA",
            SolverKind::Ppa => "PPA",
            SolverKind::Pso => "PSO",
            SolverKind::Sd => "SD",
            SolverKind::Cs => "CS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GA" => Some(SolverKind::Ga),
            "PPA" => Some(SolverKind::Ppa),
            "PSO" => Some(SolverKind::Pso),
            "SD" => Some(SolverKind::Sd),
            "CS" => Some(SolverKind::Cs),
            _ => None,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operator constants. Textbook defaults; none of them is tuned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorParams {
    pub crossover_rate: f64,
    /// Gaussian mutation standard deviation as a fraction of each range.
    pub mutation_sigma: f64,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub max_runners: usize,
    pub fd_step: f64,
    pub step_tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// First line-search step as a fraction of the smallest range.
    pub initial_step: f64,
    /// Weight on `max(g, 0)` in the direct-search objective.
    pub penalty: f64,
}

impl Default for OperatorParams {
    fn default() -> Self {
        OperatorParams {
            crossover_rate: 0.9,
            mutation_sigma: 0.02,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            max_runners: 5,
            fd_step: 1e-6,
            step_tolerance: 1e-8,
            max_iterations: 50,
            max_halvings: 20,
            initial_step: 0.1,
            penalty: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Population size (GA, PSO) or number of solutions propagated (PPA).
    /// Ignored by the direct-search methods.
    pub size: usize,
    pub priority: Priority,
    /// Scalarizing weight for direct search on bi-objective problems.
    pub omega: f64,
    pub seed: u64,
    pub label: String,
    pub params: OperatorParams,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, size: usize) -> Self {
        SolverConfig {
            kind,
            size,
            priority: Priority::LOWEST,
            omega: 0.5,
            seed: 0,
            label: format!("{}-{}", kind.name(), size),
            params: OperatorParams::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_priority(mut self, priority: Priority) -> Self {
        self.priority = priority;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(SolverError::InvalidConfig(format!(
                "omega {} outside [0, 1]",
                self.omega
            )));
        }
        let min = match self.kind {
            SolverKind::Ga => 2,
            SolverKind::Ppa | SolverKind::Pso => 1,
            SolverKind::Sd | SolverKind::Cs => 0,
        };
        if self.size < min {
            return Err(SolverError::InvalidConfig(format!(
                "{} needs size >= {min}, got {}",
                self.kind, self.size
            )));
        }
        Ok(())
    }
}

/// Where a solver sends points to be evaluated.
pub trait Objective {
    fn evaluate(&mut self, point: &Point) -> Result<Evaluation, Terminated>;
}

impl<O: Objective + ?Sized> Objective for &mut O {
    fn evaluate(&mut self, point: &Point) -> Result<Evaluation, Terminated> {
        (**self).evaluate(point)
    }
}

/// Routes evaluations through the scheduler using a fresh single-use reply
/// mailbox per call.
#[derive(Debug, Clone)]
pub struct Proxy {
    solver: SolverId,
    scheduler: Mailbox<Message>,
    pub requests: u64,
    pub replies: u64,
}

impl Proxy {
    pub fn new(solver: SolverId, scheduler: Mailbox<Message>) -> Self {
        Proxy {
            solver,
            scheduler,
            requests: 0,
            replies: 0,
        }
    }
}

impl Objective for Proxy {
    fn evaluate(&mut self, point: &Point) -> Result<Evaluation, Terminated> {
        let reply = reply_box();
        self.scheduler
            .put(Message::new(
                AgentId::Solver(self.solver),
                Body::EvaluatePoint(PointRequest {
                    point: point.clone(),
                    reply: reply.clone(),
                    ticket: None,
                }),
            ))
            .map_err(|_| Terminated)?;
        self.requests += 1;
        match reply.take() {
            Ok(Message {
                body: Body::ObjectiveValue(e),
                ..
            }) => {
                self.replies += 1;
                Ok(e)
            }
            _ => Err(Terminated),
        }
    }
}

/// One proxied evaluation.
pub fn proxy_objective(
    point: &Point,
    scheduler: &Mailbox<Message>,
    solver: SolverId,
) -> Result<Evaluation, Terminated> {
    Proxy::new(solver, scheduler.clone()).evaluate(point)
}

/// Calls the model in-process, optionally capped. Used for tests and for
/// running a single solver outside the agent system.
#[derive(Debug, Clone)]
pub struct DirectObjective {
    problem: Arc<Problem>,
    solver: SolverId,
    pub count: u64,
    pub limit: Option<u64>,
}

impl DirectObjective {
    pub fn new(problem: Arc<Problem>) -> Self {
        DirectObjective {
            problem,
            solver: SolverId(0),
            count: 0,
            limit: None,
        }
    }

    pub fn with_limit(mut self, limit: u64) -> Self {
        self.limit = Some(limit);
        self
    }
}

impl Objective for DirectObjective {
    fn evaluate(&mut self, point: &Point) -> Result<Evaluation, Terminated> {
        if self.limit.is_some_and(|l| self.count >= l) {
            return Err(Terminated);
        }
        self.count += 1;
        let outcome = evaluate_or_sentinel(&self.problem, point);
        Ok(Evaluation::from_outcome(outcome, self.solver, self.count, self.count))
    }
}

/// Evaluated members of a population-based solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Evaluation>,
    pub generation: u64,
}

impl Population {
    pub fn evaluate<O: Objective>(points: &[Point], objective: &mut O) -> Result<Self, Terminated> {
        let members = points
            .iter()
            .map(|p| objective.evaluate(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Population {
            members,
            generation: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Evaluation> {
        best_first(&self.members).first().map(|&i| &self.members[i])
    }
}

/// Takes every SHAREBEST payload currently waiting.
pub fn drain_shared(inbox: &Mailbox<Message>) -> Vec<Evaluation> {
    inbox
        .drain()
        .into_iter()
        .filter_map(|m| match m.body {
            Body::ShareBest(e) => Some(e),
            _ => None,
        })
        .collect()
}

/// Everything a running solver needs apart from its objective.
#[derive(Debug, Clone)]
pub struct SolverContext {
    pub id: SolverId,
    pub domain: Domain,
    pub inbox: Option<Mailbox<Message>>,
    pub events: EventLog,
}

impl SolverContext {
    pub fn new(id: SolverId, domain: Domain) -> Self {
        SolverContext {
            id,
            domain,
            inbox: None,
            events: EventLog::disabled(),
        }
    }

    pub fn shared(&self) -> Vec<Evaluation> {
        self.inbox.as_ref().map(drain_shared).unwrap_or_default()
    }

    fn injection(&self, received: usize, size_before: usize, size_after: usize) {
        if received > 0 {
            self.events.emit(Event::Injection {
                solver: self.id.0,
                received,
                size_before,
                size_after,
            });
        }
    }
}

/// Counts evaluations and emits a claim whenever the solver sees a value
/// that improves on everything it has seen itself.
struct Tracked<'a, O> {
    inner: O,
    ctx: &'a SolverContext,
    own: Option<Archive>,
    evaluations: u64,
}

impl<O: Objective> Objective for Tracked<'_, O> {
    fn evaluate(&mut self, point: &Point) -> Result<Evaluation, Terminated> {
        let e = self.inner.evaluate(point)?;
        self.evaluations += 1;
        let own = self
            .own
            .get_or_insert_with(|| Archive::new(ArchiveMode::for_objectives(e.z.len())));
        if self.ctx.events.is_enabled() && own.update(e.clone()) {
            self.ctx.events.emit(Event::Claim {
                solver: self.ctx.id.0,
                seq: e.seq,
                z: e.z.clone(),
                g: e.g,
            });
        }
        Ok(e)
    }
}

/// How a solver run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolverExit {
    pub evaluations: u64,
}

/// Stable fingerprint of a list of points (FNV-1a over the value bits).
pub fn fingerprint(points: &[Point]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in points {
        for v in p.values() {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Runs one solver until its objective reports termination.
pub fn solver_loop<O: Objective>(
    cfg: &SolverConfig,
    ctx: &SolverContext,
    initial: &[Point],
    objective: O,
) -> SolverExit {
    ctx.events.emit(Event::SolverStart {
        solver: ctx.id.0,
        label: cfg.label.clone(),
        population: initial.len(),
        fingerprint: fingerprint(initial),
    });
    let mut tracked = Tracked {
        inner: objective,
        ctx,
        own: None,
        evaluations: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let _ = match cfg.kind {
        SolverKind::Ga | SolverKind::Ppa => run_population(cfg, ctx, initial, &mut tracked, &mut rng),
        SolverKind::Pso => run_swarm(cfg, ctx, initial, &mut tracked, &mut rng),
        SolverKind::Sd | SolverKind::Cs => run_direct(cfg, ctx, initial, &mut tracked, &mut rng),
    };
    let exit = SolverExit {
        evaluations: tracked.evaluations,
    };
    ctx.events.emit(Event::SolverExit {
        solver: ctx.id.0,
        evaluations: exit.evaluations,
    });
    exit
}

fn initial_points(ctx: &SolverContext, initial: &[Point], rng: &mut ChaCha8Rng) -> Vec<Point> {
    if initial.is_empty() {
        vec![ctx.domain.sample(rng)]
    } else {
        initial.to_vec()
    }
}

fn run_population<O: Objective>(
    cfg: &SolverConfig,
    ctx: &SolverContext,
    initial: &[Point],
    objective: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<(), Terminated> {
    let points = initial_points(ctx, initial, rng);
    let mut pop = Population::evaluate(&points, objective)?;
    loop {
        let shared = ctx.shared();
        let before = pop.len();
        ctx.injection(shared.len(), before, before + shared.len());
        pop = match cfg.kind {
            SolverKind::Ga => ga_step(pop, cfg, &ctx.domain, rng, &shared, objective)?,
            _ => ppa_step(pop, cfg, &ctx.domain, rng, &shared, objective)?,
        };
    }
}

fn run_swarm<O: Objective>(
    cfg: &SolverConfig,
    ctx: &SolverContext,
    initial: &[Point],
    objective: &mut O,
    rng: &mut ChaCha8Rng,
) -> Result<(), Terminated> {
    let points = initial_points(ctx, initial, rng);
    let mut swarm = pso_init(&points, cfg, &ctx.domain, rng, objective)?;
    loop {
        let shared = ctx.shared();
        ctx.injection(shared.len(), swarm.len(), swarm.len());
        swarm = pso_step(swarm, cfg, &ctx.domain, rng, &shared, objective)?;
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn sphere(n: usize) -> Arc<Problem> {
        Arc::new(
            Problem::new(
                "sphere",
                Domain::uniform(n, -5.0, 5.0).unwrap(),
                1,
                |d: &[f64]| (vec![d.iter().map(|x| x * x).sum()], -1.0),
            )
            .unwrap(),
        )
    }

    pub fn biobj(n: usize) -> Arc<Problem> {
        Arc::new(
            Problem::new(
                "biobj",
                Domain::uniform(n, -2.0, 3.0).unwrap(),
                2,
                |d: &[f64]| {
                    (
                        vec![
                            d.iter().map(|x| x * x).sum(),
                            d.iter().map(|x| (x - 1.0) * (x - 1.0)).sum(),
                        ],
                        -1.0,
                    )
                },
            )
            .unwrap(),
        )
    }

    pub fn random_points(domain: &Domain, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| domain.sample(&mut rng)).collect()
    }
}
