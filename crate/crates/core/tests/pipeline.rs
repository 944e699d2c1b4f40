//! The four agent kinds wired together by hand, as an embedding application
//! would do it.

use std::sync::Arc;
use std::thread;

use agentopt::analysis::analysis_loop;
use agentopt::benchmarks::registry_get;
use agentopt::evaluator::evaluator_loop;
use agentopt::events::{Event, EventLog};
use agentopt::messaging::{Capacities, EvaluatorId, Mailbox, Message};
use agentopt::scheduler::{Budget, Scheduler, SchedulerConfig, SchedulerLinks, StopReason};
use agentopt::solvers::{solver_loop, Proxy, SolverConfig, SolverContext, SolverKind};
use agentopt::{ArchiveMode, SolverId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    reason: StopReason,
    dispatched: u64,
    best: Option<f64>,
    events: Vec<Event>,
    requests: Vec<(u64, u64)>,
}

fn run(problem: &str, kinds: &[SolverKind], budget: Budget, n_evaluators: usize, sharing: bool) -> Outcome {
    let problem = Arc::new(registry_get(problem).unwrap());
    let caps = Capacities::for_run(kinds.len(), n_evaluators);
    let inbox: Mailbox<Message> = Mailbox::new(caps.scheduler);
    let analysis_mb: Mailbox<Message> = Mailbox::new(caps.analysis);
    let evaluators: Vec<Mailbox<Message>> = (0..n_evaluators).map(|_| Mailbox::new(caps.evaluator)).collect();
    let shares: Vec<Mailbox<Message>> = kinds.iter().map(|_| Mailbox::new(caps.share)).collect();
    let events = EventLog::new();
    let mode = ArchiveMode::for_objectives(problem.n_obj);

    let analysis = {
        let (a, s, ev) = (analysis_mb.clone(), inbox.clone(), events.clone());
        thread::spawn(move || analysis_loop(mode, a, s, false, ev))
    };
    let evals: Vec<_> = evaluators
        .iter()
        .enumerate()
        .map(|(i, mb)| {
            let (mb, s, a, ev, p) = (mb.clone(), inbox.clone(), analysis_mb.clone(), events.clone(), problem.clone());
            thread::spawn(move || evaluator_loop(EvaluatorId(i), p, mb, s, a, ev))
        })
        .collect();
    let cfg = SchedulerConfig {
        budget,
        sharing,
        deterministic: false,
        priorities: kinds.iter().map(|_| Default::default()).collect(),
        archive_mode: mode,
    };
    let links = SchedulerLinks {
        inbox: inbox.clone(),
        evaluators,
        solvers: shares.clone(),
        analysis: analysis_mb,
    };
    let sched = {
        let ev = events.clone();
        thread::spawn(move || Scheduler::new(cfg, links, ev).run())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let initial: Vec<_> = (0..problem.domain.len().max(2)).map(|_| problem.domain.sample(&mut rng)).collect();
    let solvers: Vec<_> = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let cfg = SolverConfig::new(kind, initial.len()).with_seed(i as u64);
            let ctx = SolverContext {
                inbox: Some(shares[i].clone()),
                events: events.clone(),
                ..SolverContext::new(SolverId(i), problem.domain.clone())
            };
            let (sched, init) = (inbox.clone(), initial.clone());
            thread::spawn(move || {
                let mut proxy = Proxy::new(SolverId(i), sched);
                solver_loop(&cfg, &ctx, &init, &mut proxy);
                (proxy.requests, proxy.replies)
            })
        })
        .collect();
    let report = sched.join().unwrap();
    let requests = solvers.into_iter().map(|h| h.join().unwrap()).collect();
    for h in evals {
        h.join().unwrap();
    }
    analysis.join().unwrap();
    Outcome {
        reason: report.reason,
        dispatched: report.dispatched,
        best: report.archive.best().map(|e| e.z[0]),
        events: events.snapshot(),
        requests,
    }
}

#[test]
fn every_solver_kind_cooperates_until_the_budget_runs_out() {
    use SolverKind::*;
    let out = run("rastrigin-3", &[Ga, Ppa, Pso, Sd, Cs], Budget::Evaluations(2500), 2, true);
    assert_eq!(out.reason, StopReason::EvaluationBudget);
    assert_eq!(out.dispatched, 2500);
    for (i, &(req, rep)) in out.requests.iter().enumerate() {
        assert!(rep > 0, "solver {i} was never served");
        assert!(req - rep <= 1, "solver {i}: {req} requests, {rep} replies");
    }
    assert!(out.best.unwrap() < 3.0, "best {:?}", out.best);
    let starts = out.events.iter().filter(|e| matches!(e, Event::SolverStart { .. })).count();
    let exits = out.events.iter().filter(|e| matches!(e, Event::SolverExit { .. })).count();
    assert_eq!((starts, exits), (5, 5));
    assert!(out.events.iter().any(|e| matches!(e, Event::Broadcast { .. })));
}

#[test]
fn message_budget_counts_scheduler_messages() {
    let out = run("sphere-2", &[SolverKind::Ga], Budget::Messages(500), 1, false);
    assert_eq!(out.reason, StopReason::MessageBudget);
    // each evaluation costs at least a request and an announcement
    assert!(out.dispatched > 0 && out.dispatched <= 250);
    assert!(!out.events.iter().any(|e| matches!(e, Event::Broadcast { .. })));
}
