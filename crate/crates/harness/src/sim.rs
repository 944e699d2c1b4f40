//! Scheduler workloads with stub agents, for exercising dispatch order and
//! liveness without real solvers.

use std::sync::{Arc, Mutex};
use std::thread;

use agentopt::analysis::{analysis_loop, ArchiveMode};
use agentopt::evaluator::evaluator_loop;
use agentopt::events::{Event, EventLog};
use agentopt::messaging::{
    reply_box, AgentId, Body, Capacities, EvaluatorId, Mailbox, Message, PointRequest,
};
use agentopt::problem::{Point, Problem};
use agentopt::scheduler::{Budget, Priority, Scheduler, SchedulerConfig, SchedulerLinks, SchedulerReport};
use agentopt::solvers::{Objective, Proxy};
use agentopt::SolverId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One dispatched request, identified by its position in the arrival list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dispatched {
    pub seq: u64,
    pub solver: usize,
    pub tag: usize,
    pub evaluator: usize,
}

#[derive(Debug)]
pub struct ReplayReport {
    pub order: Vec<Dispatched>,
    pub report: SchedulerReport,
    pub events: Vec<Event>,
}

/// Queues one request per entry of `arrivals` (the entry is the sending
/// solver) before the scheduler starts, then serves them with stub
/// evaluators that re-announce themselves after every dispatch. Request `k`
/// carries the point `[k]`.
pub fn replay(arrivals: &[usize], priorities: &[Priority], n_evaluators: usize) -> ReplayReport {
    let n_solvers = priorities.len();
    let caps = Capacities::for_run(n_solvers, n_evaluators);
    let inbox: Mailbox<Message> = Mailbox::new(arrivals.len() + 2 * n_evaluators + caps.scheduler);
    let analysis_mb: Mailbox<Message> = Mailbox::new(caps.analysis);
    let evaluators: Vec<Mailbox<Message>> = (0..n_evaluators).map(|_| Mailbox::new(caps.evaluator)).collect();
    let shares: Vec<Mailbox<Message>> = (0..n_solvers).map(|_| Mailbox::new(caps.share)).collect();
    let events = EventLog::new();

    for id in 0..n_evaluators {
        let from = AgentId::Evaluator(EvaluatorId(id));
        inbox
            .put(Message::new(from, Body::RequestPoint(EvaluatorId(id))))
            .expect("fresh mailbox");
    }
    for (tag, &solver) in arrivals.iter().enumerate() {
        let req = PointRequest {
            point: Point::new(vec![tag as f64]),
            reply: reply_box(),
            ticket: None,
        };
        inbox
            .put(Message::new(AgentId::Solver(SolverId(solver)), Body::EvaluatePoint(req)))
            .expect("mailbox sized for the script");
    }

    let analysis = {
        let (a, s, ev) = (analysis_mb.clone(), inbox.clone(), events.clone());
        thread::spawn(move || analysis_loop(ArchiveMode::Single, a, s, false, ev))
    };
    let seen = Arc::new(Mutex::new(Vec::new()));
    let stubs: Vec<_> = evaluators
        .iter()
        .enumerate()
        .map(|(id, mb)| {
            let (mb, sched, seen) = (mb.clone(), inbox.clone(), seen.clone());
            thread::spawn(move || {
                while let Ok(msg) = mb.take() {
                    let Body::EvaluatePoint(req) = msg.body else {
                        continue;
                    };
                    let ticket = req.ticket.expect("dispatched requests carry a ticket");
                    seen.lock().expect("not poisoned").push(Dispatched {
                        seq: ticket.seq,
                        solver: ticket.solver.0,
                        tag: req.point.values()[0] as usize,
                        evaluator: id,
                    });
                    let from = AgentId::Evaluator(EvaluatorId(id));
                    if sched.put(Message::new(from, Body::RequestPoint(EvaluatorId(id)))).is_err() {
                        break;
                    }
                }
            })
        })
        .collect();

    let cfg = SchedulerConfig {
        budget: Budget::Evaluations(arrivals.len() as u64),
        sharing: false,
        deterministic: false,
        priorities: priorities.to_vec(),
        archive_mode: ArchiveMode::Single,
    };
    let links = SchedulerLinks {
        inbox,
        evaluators,
        solvers: shares,
        analysis: analysis_mb,
    };
    let report = Scheduler::new(cfg, links, events.clone()).run();
    for h in stubs {
        h.join().expect("stub evaluator");
    }
    analysis.join().expect("analysis agent");
    let mut order = std::mem::take(&mut *seen.lock().expect("not poisoned"));
    order.sort_by_key(|d| d.seq);
    ReplayReport {
        order,
        report,
        events: events.snapshot(),
    }
}

/// Order a plain FIFO queue would serve the same arrivals in.
pub fn fifo_oracle(arrivals: &[usize]) -> Vec<(usize, usize)> {
    let mut q = std::collections::VecDeque::new();
    q.extend(arrivals.iter().copied().enumerate().map(|(tag, s)| (s, tag)));
    q.into_iter().collect()
}

#[derive(Debug)]
pub struct ClosedLoopReport {
    pub replies: Vec<u64>,
    pub report: SchedulerReport,
    pub events: Vec<Event>,
}

/// Stub solvers, each sending `requests[i]` random points one at a time and
/// waiting for every reply, against real evaluator and analysis agents. The
/// evaluation budget equals the total number of requests.
pub fn closed_loop(
    problem: Arc<Problem>,
    priorities: &[Priority],
    requests: &[u64],
    n_evaluators: usize,
    seed: u64,
) -> ClosedLoopReport {
    assert_eq!(priorities.len(), requests.len(), "one request count per solver");
    let n_solvers = priorities.len();
    let caps = Capacities::for_run(n_solvers, n_evaluators);
    let inbox: Mailbox<Message> = Mailbox::new(caps.scheduler);
    let analysis_mb: Mailbox<Message> = Mailbox::new(caps.analysis);
    let evaluators: Vec<Mailbox<Message>> = (0..n_evaluators).map(|_| Mailbox::new(caps.evaluator)).collect();
    let shares: Vec<Mailbox<Message>> = (0..n_solvers).map(|_| Mailbox::new(caps.share)).collect();
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
        budget: Budget::Evaluations(requests.iter().sum()),
        sharing: true,
        deterministic: false,
        priorities: priorities.to_vec(),
        archive_mode: mode,
    };
    let links = SchedulerLinks {
        inbox: inbox.clone(),
        evaluators,
        solvers: shares,
        analysis: analysis_mb,
    };
    let sched = {
        let ev = events.clone();
        thread::spawn(move || Scheduler::new(cfg, links, ev).run())
    };
    let solvers: Vec<_> = requests
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (sched, domain) = (inbox.clone(), problem.domain.clone());
            thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let mut proxy = Proxy::new(SolverId(i), sched);
                for _ in 0..n {
                    if proxy.evaluate(&domain.sample(&mut rng)).is_err() {
                        break;
                    }
                }
                proxy.replies
            })
        })
        .collect();
    let replies = solvers.into_iter().map(|h| h.join().expect("stub solver")).collect();
    let report = sched.join().expect("scheduler");
    for h in evals {
        h.join().expect("evaluator");
    }
    analysis.join().expect("analysis agent");
    ClosedLoopReport {
        replies,
        report,
        events: events.snapshot(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_with_uniform_priorities_is_fifo() {
        let arrivals = [0, 1, 1, 2, 0, 2, 2, 1];
        let r = replay(&arrivals, &[Priority::LOWEST; 3], 2);
        let got: Vec<(usize, usize)> = r.order.iter().map(|d| (d.solver, d.tag)).collect();
        assert_eq!(got, fifo_oracle(&arrivals));
        assert_eq!(r.report.dispatched, arrivals.len() as u64);
    }

    #[test]
    fn replay_prefers_higher_priority() {
        let lo = Priority::new(1).unwrap();
        let hi = Priority::new(10).unwrap();
        // one evaluator: the high-priority request queued last goes first
        let r = replay(&[0, 0, 0, 1], &[lo, hi], 1);
        // the first request is dispatched on arrival, before the rest exist
        assert_eq!(r.order[0].tag, 0);
        assert_eq!(r.order[1].solver, 1);
    }
}
