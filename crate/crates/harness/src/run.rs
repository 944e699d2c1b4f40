//! One run of the agent system: wiring, startup, teardown and collection.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use agentopt::analysis::{analysis_loop, Archive, ArchiveMode};
use agentopt::benchmarks::{registry_get, ProblemError};
use agentopt::evaluator::{evaluator_loop, EvaluatorStats};
use agentopt::events::{Event, EventLog};
use agentopt::messaging::{Capacities, EvaluatorId, Mailbox, Message};
use agentopt::scheduler::{Scheduler, SchedulerConfig, SchedulerLinks, StopReason};
use agentopt::solvers::{solver_loop, Proxy, SolverClass, SolverConfig, SolverContext, SolverError};
use agentopt::{Point, Problem, SolverId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{population_seed, solver_seed, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver {label}: {source}")]
    Solver { label: String, source: SolverError },
}

/// One improvement found during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub seq: u64,
    pub scheduler_iter: u64,
    pub z: Vec<f64>,
    pub g: f64,
    pub solver: usize,
    pub label: String,
    pub class: SolverClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub label: String,
    pub class: SolverClass,
    pub size: usize,
    pub omega: f64,
    pub dispatched: u64,
    pub requests: u64,
    pub replies: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchedulerSummary {
    pub reason: StopReason,
    pub messages: u64,
    pub teardown_messages: u64,
    pub dispatched: u64,
    pub broadcasts: u64,
    pub shares_delivered: u64,
    pub shares_dropped: u64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub problem: Arc<Problem>,
    pub rep: usize,
    pub sharing: bool,
    pub population_seed: u64,
    pub initial: Vec<Point>,
    pub archive: Archive,
    pub trace: Vec<TraceRow>,
    pub solvers: Vec<SolverSummary>,
    pub evaluators: Vec<EvaluatorStats>,
    pub scheduler: SchedulerSummary,
    pub events: Vec<Event>,
    pub wall_time: Duration,
    /// False when an agent panicked; the report is then partial.
    pub valid: bool,
    pub failures: Vec<String>,
}

impl RunReport {
    /// Final best objective value, for single-objective runs.
    pub fn best_z(&self) -> Option<f64> {
        self.archive.best().map(|e| e.z[0])
    }

    pub fn best_feasible(&self) -> bool {
        self.archive.best().is_some_and(|e| e.feasible())
    }

    /// Objective vectors of the final archive.
    pub fn front(&self) -> Vec<Vec<f64>> {
        self.archive.members().iter().map(|e| e.z.clone()).collect()
    }
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs repetition `rep` with sharing switched on or off. Every solver
/// starts from the same population, drawn from the repetition's seed.
pub fn run_once(cfg: &RunConfig, rep: usize, sharing: bool) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let problem = Arc::new(registry_get(&cfg.problem)?);
    let n_vars = problem.domain.len();
    let mut solver_cfgs: Vec<SolverConfig> = cfg.solver_configs(n_vars);
    for (i, s) in solver_cfgs.iter_mut().enumerate() {
        s.seed = solver_seed(cfg.seed, rep, sharing, i);
        s.validate().map_err(|source| RunError::Solver {
            label: s.label.clone(),
            source,
        })?;
    }
    let np = cfg.resolve_np(n_vars);
    let pop_seed = population_seed(cfg.seed, rep);
    let mut rng = ChaCha8Rng::seed_from_u64(pop_seed);
    let initial: Vec<Point> = (0..np).map(|_| problem.domain.sample(&mut rng)).collect();
    Ok(run_agents(cfg, problem, solver_cfgs, initial, rep, sharing, pop_seed))
}

fn run_agents(
    cfg: &RunConfig,
    problem: Arc<Problem>,
    solver_cfgs: Vec<SolverConfig>,
    initial: Vec<Point>,
    rep: usize,
    sharing: bool,
    pop_seed: u64,
) -> RunReport {
    let started = Instant::now();
    let n_solvers = solver_cfgs.len();
    let n_evaluators = cfg.n_evaluators;
    let caps = Capacities::for_run(n_solvers, n_evaluators);
    let events = EventLog::new();
    let mode = ArchiveMode::for_objectives(problem.n_obj);

    let scheduler_mb: Mailbox<Message> = Mailbox::new(caps.scheduler);
    let analysis_mb: Mailbox<Message> = Mailbox::new(caps.analysis);
    let evaluator_mbs: Vec<Mailbox<Message>> = (0..n_evaluators).map(|_| Mailbox::new(caps.evaluator)).collect();
    let share_mbs: Vec<Mailbox<Message>> = (0..n_solvers).map(|_| Mailbox::new(caps.share)).collect();

    // startup order: analysis, evaluators, scheduler, solvers
    let analysis = {
        let (inbox, sched, ev) = (analysis_mb.clone(), scheduler_mb.clone(), events.clone());
        let ack = cfg.deterministic;
        thread::spawn(move || analysis_loop(mode, inbox, sched, ack, ev))
    };
    let evaluators: Vec<_> = evaluator_mbs
        .iter()
        .enumerate()
        .map(|(i, inbox)| {
            let (inbox, sched, an, ev, p) = (
                inbox.clone(),
                scheduler_mb.clone(),
                analysis_mb.clone(),
                events.clone(),
                problem.clone(),
            );
            thread::spawn(move || evaluator_loop(EvaluatorId(i), p, inbox, sched, an, ev))
        })
        .collect();
    let scheduler = {
        let sched_cfg = SchedulerConfig {
            budget: cfg.budget,
            sharing,
            deterministic: cfg.deterministic,
            priorities: solver_cfgs.iter().map(|s| s.priority).collect(),
            archive_mode: mode,
        };
        let links = SchedulerLinks {
            inbox: scheduler_mb.clone(),
            evaluators: evaluator_mbs.clone(),
            solvers: share_mbs.clone(),
            analysis: analysis_mb.clone(),
        };
        let ev = events.clone();
        thread::spawn(move || Scheduler::new(sched_cfg, links, ev).run())
    };
    let solvers: Vec<_> = solver_cfgs
        .iter()
        .enumerate()
        .map(|(i, sc)| {
            let sc = sc.clone();
            let ctx = SolverContext {
                inbox: Some(share_mbs[i].clone()),
                events: events.clone(),
                ..SolverContext::new(SolverId(i), problem.domain.clone())
            };
            let sched = scheduler_mb.clone();
            let init = initial.clone();
            thread::spawn(move || {
                let mut proxy = Proxy::new(SolverId(i), sched.clone());
                let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
                    solver_loop(&sc, &ctx, &init, &mut proxy);
                }));
                ctx.events.emit(Event::Proxy {
                    solver: i,
                    requests: proxy.requests,
                    replies: proxy.replies,
                });
                if outcome.is_err() {
                    // abort the run; the scheduler sees its mailbox closed
                    sched.close();
                }
                (proxy.requests, proxy.replies, outcome.err().map(|p| panic_message(&*p)))
            })
        })
        .collect();

    let mut failures = Vec::new();
    let sched_report = match scheduler.join() {
        Ok(r) => Some(r),
        Err(p) => {
            failures.push(format!("scheduler panicked: {}", panic_message(&*p)));
            // release everyone still blocked
            scheduler_mb.close();
            analysis_mb.close();
            for mb in evaluator_mbs.iter().chain(&share_mbs) {
                mb.close();
            }
            None
        }
    };
    let mut proxies = Vec::with_capacity(n_solvers);
    for (i, h) in solvers.into_iter().enumerate() {
        match h.join() {
            Ok((req, rep_count, err)) => {
                if let Some(msg) = err {
                    failures.push(format!("{} panicked: {msg}", solver_cfgs[i].label));
                }
                proxies.push((req, rep_count));
            }
            Err(p) => {
                failures.push(format!("{} thread failed: {}", solver_cfgs[i].label, panic_message(&*p)));
                proxies.push((0, 0));
            }
        }
    }
    let evaluator_stats: Vec<EvaluatorStats> = evaluators
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            h.join().unwrap_or_else(|p| {
                failures.push(format!("evaluator {i} panicked: {}", panic_message(&*p)));
                EvaluatorStats::default()
            })
        })
        .collect();
    let final_archive = analysis.join().unwrap_or_else(|p| {
        failures.push(format!("analysis panicked: {}", panic_message(&*p)));
        Archive::new(mode)
    });

    for (name, mb) in [("scheduler", &scheduler_mb), ("analysis", &analysis_mb)] {
        events.emit(Event::Mailbox {
            name: name.into(),
            stats: mb.stats(),
        });
    }
    for (i, mb) in evaluator_mbs.iter().enumerate() {
        events.emit(Event::Mailbox {
            name: format!("evaluator-{i}"),
            stats: mb.stats(),
        });
    }
    for (i, mb) in share_mbs.iter().enumerate() {
        events.emit(Event::Mailbox {
            name: format!("share-{i}"),
            stats: mb.stats(),
        });
    }

    let (archive, scheduler) = match sched_report {
        Some(r) => (
            r.archive.clone(),
            SchedulerSummary {
                reason: r.reason,
                messages: r.messages,
                teardown_messages: r.teardown_messages,
                dispatched: r.dispatched,
                broadcasts: r.broadcasts,
                shares_delivered: r.shares_delivered,
                shares_dropped: r.shares_dropped,
            },
        ),
        None => (
            final_archive,
            SchedulerSummary {
                reason: StopReason::Aborted,
                messages: 0,
                teardown_messages: 0,
                dispatched: 0,
                broadcasts: 0,
                shares_delivered: 0,
                shares_dropped: 0,
            },
        ),
    };
    let valid = failures.is_empty() && scheduler.reason != StopReason::Aborted;
    let per_solver = events_dispatches(&events.snapshot(), n_solvers);
    let solvers = solver_cfgs
        .iter()
        .enumerate()
        .map(|(i, s)| SolverSummary {
            label: s.label.clone(),
            class: s.kind.class(),
            size: s.size,
            omega: s.omega,
            dispatched: per_solver[i],
            requests: proxies[i].0,
            replies: proxies[i].1,
        })
        .collect::<Vec<_>>();
    let trace = archive
        .history()
        .iter()
        .map(|imp| {
            let e = &imp.evaluation;
            let s = solver_cfgs.get(e.solver.0);
            TraceRow {
                seq: e.seq,
                scheduler_iter: e.scheduler_iter,
                z: e.z.clone(),
                g: e.g,
                solver: e.solver.0,
                label: s.map_or_else(|| "?".into(), |s| s.label.clone()),
                class: s.map_or(SolverClass::Mh, |s| s.kind.class()),
            }
        })
        .collect();
    RunReport {
        problem,
        rep,
        sharing,
        population_seed: pop_seed,
        initial,
        archive,
        trace,
        solvers,
        evaluators: evaluator_stats,
        scheduler,
        events: events.snapshot(),
        wall_time: started.elapsed(),
        valid,
        failures,
    }
}

fn events_dispatches(events: &[Event], n: usize) -> Vec<u64> {
    let mut v = vec![0; n];
    for e in events {
        if let Event::Dispatch { solver, .. } = e {
            if let Some(c) = v.get_mut(*solver) {
                *c += 1;
            }
        }
    }
    v
}
