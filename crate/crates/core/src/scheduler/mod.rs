//! The scheduler agent.
//!
//! Solvers' evaluation requests land in a set of priority FIFOs; idle
//! evaluators announce themselves with REQUESTPOINT. After every received
//! message the scheduler pairs idle evaluators with the highest-priority
//! pending requests. Improvements reported by the analysis agent are
//! broadcast to every solver when sharing is on. The scheduler is the only
//! agent that decides to stop: once the budget is spent it tears the system
//! down and collects the final archive from the analysis agent.
//!
//! In deterministic mode messages are staged until the whole system is
//! quiescent (every solver waiting on a request, every evaluator idle, every
//! dispatched evaluation acknowledged by the analysis agent) and then
//! processed in a canonical order, one dispatch at a time. Combined with
//! seeded solvers this makes a run bit-reproducible.

mod queues;

use serde::Serialize;

pub use queues::{EvaluatorQueue, InvalidPriority, Priority, PriorityQueues, MAX_PRIORITY};

use crate::analysis::{Archive, ArchiveMode};
use crate::evaluation::{Evaluation, SolverId};
use crate::events::{Event, EventLog};
use crate::messaging::{
    reply_box, AgentId, Analysed, Body, Closed, EvaluatorId, Mailbox, Message, PointRequest,
    ReplyBox, Ticket,
};
use crate::problem::Point;

/// When the scheduler stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Budget {
    /// Messages received by the scheduler.
    Messages(u64),
    /// Evaluations dispatched to evaluators.
    Evaluations(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    MessageBudget,
    EvaluationBudget,
    /// The scheduler mailbox was closed from outside.
    Aborted,
}

#[derive(Debug, Clone)]
pub struct SchedulerConfig {
    pub budget: Budget,
    pub sharing: bool,
    pub deterministic: bool,
    /// Priority of each solver, indexed by [`SolverId`].
    pub priorities: Vec<Priority>,
    /// Archive mode returned when the analysis agent cannot be reached.
    pub archive_mode: ArchiveMode,
}

/// Persistent channels wired to the scheduler.
#[derive(Debug, Clone)]
pub struct SchedulerLinks {
    pub inbox: Mailbox<Message>,
    pub evaluators: Vec<Mailbox<Message>>,
    pub solvers: Vec<Mailbox<Message>>,
    pub analysis: Mailbox<Message>,
}

/// A queued evaluation request.
#[derive(Debug, Clone)]
pub struct EvaluationRequest {
    pub point: Point,
    pub reply: ReplyBox,
    pub solver: SolverId,
    pub priority: Priority,
}

#[derive(Debug, Clone)]
pub struct SchedulerReport {
    pub archive: Archive,
    pub reason: StopReason,
    /// Messages taken from the scheduler mailbox before the budget ran out.
    pub messages: u64,
    /// Messages taken while tearing down.
    pub teardown_messages: u64,
    pub dispatched: u64,
    pub per_solver: Vec<u64>,
    pub broadcasts: u64,
    pub shares_delivered: u64,
    pub shares_dropped: u64,
}

pub struct Scheduler {
    cfg: SchedulerConfig,
    links: SchedulerLinks,
    events: EventLog,
    queues: PriorityQueues<EvaluationRequest>,
    idle: EvaluatorQueue,
    msg_count: u64,
    dispatched: u64,
    per_solver: Vec<u64>,
    broadcasts: u64,
    shares_delivered: u64,
    shares_dropped: u64,
    // deterministic mode only
    staged: Vec<Message>,
    waiting: Vec<bool>,
    staged_idle: usize,
    unacknowledged: u64,
}

impl Scheduler {
    pub fn new(cfg: SchedulerConfig, links: SchedulerLinks, events: EventLog) -> Self {
        let n_solvers = links.solvers.len();
        Scheduler {
            per_solver: vec![0; n_solvers],
            waiting: vec![false; n_solvers],
            cfg,
            links,
            events,
            queues: PriorityQueues::new(),
            idle: EvaluatorQueue::new(),
            msg_count: 0,
            dispatched: 0,
            broadcasts: 0,
            shares_delivered: 0,
            shares_dropped: 0,
            staged: Vec::new(),
            staged_idle: 0,
            unacknowledged: 0,
        }
    }

    fn exhausted(&self) -> Option<StopReason> {
        match self.cfg.budget {
            Budget::Messages(n) if self.msg_count >= n => Some(StopReason::MessageBudget),
            Budget::Evaluations(n) if self.dispatched >= n => Some(StopReason::EvaluationBudget),
            _ => None,
        }
    }

    fn may_dispatch(&self) -> bool {
        match self.cfg.budget {
            Budget::Evaluations(n) => self.dispatched < n,
            Budget::Messages(_) => true,
        }
    }

    /// Main loop; returns once the budget is spent and the system is torn
    /// down.
    pub fn run(mut self) -> SchedulerReport {
        let reason = loop {
            if let Some(reason) = self.exhausted() {
                break reason;
            }
            let msg = match self.links.inbox.take() {
                Ok(m) => m,
                Err(Closed) => break StopReason::Aborted,
            };
            self.msg_count += 1;
            if self.cfg.deterministic {
                self.stage(msg);
            } else {
                self.handle(msg);
                self.dispatch_ready();
            }
        };
        self.teardown(reason)
    }

    fn priority_of(&self, solver: SolverId) -> Priority {
        self.cfg
            .priorities
            .get(solver.0)
            .copied()
            .unwrap_or_default()
    }

    fn handle(&mut self, msg: Message) {
        match msg.body {
            Body::EvaluatePoint(req) => {
                let AgentId::Solver(solver) = msg.from else {
                    req.reply.close();
                    return;
                };
                let priority = self.priority_of(solver);
                self.queues.enqueue(
                    priority,
                    EvaluationRequest {
                        point: req.point,
                        reply: req.reply,
                        solver,
                        priority,
                    },
                );
            }
            Body::RequestPoint(id) => {
                self.idle.push(id);
            }
            Body::AnalyseSolution(Analysed::Improved(e)) => {
                if self.cfg.sharing {
                    self.broadcast(e);
                }
            }
            Body::AnalyseSolution(_) => {}
            // not addressed to the scheduler
            Body::ObjectiveValue(_)
            | Body::RetrieveBest(_)
            | Body::ShareBest(_)
            | Body::StatisticsBest(_) => {}
        }
    }

    fn broadcast(&mut self, e: Evaluation) {
        let mut delivered = 0;
        let mut dropped = 0;
        for inbox in &self.links.solvers {
            match inbox.put_evicting(Message::new(AgentId::Scheduler, Body::ShareBest(e.clone()))) {
                Ok(None) => delivered += 1,
                Ok(Some(_)) => {
                    delivered += 1;
                    dropped += 1;
                }
                Err(Closed) => {}
            }
        }
        self.broadcasts += 1;
        self.shares_delivered += delivered as u64;
        self.shares_dropped += dropped as u64;
        self.events.emit(Event::Broadcast {
            seq: e.seq,
            origin: e.solver.0,
            delivered,
            dropped,
        });
    }

    fn dispatch_ready(&mut self) {
        while !self.idle.is_empty() && !self.queues.is_empty() && self.may_dispatch() {
            self.dispatch_one();
        }
    }

    fn dispatch_one(&mut self) -> Option<SolverId> {
        let evaluator = self.idle.pop()?;
        let Some(req) = self.queues.pop() else {
            self.idle.push(evaluator);
            return None;
        };
        self.dispatched += 1;
        let ticket = Ticket {
            solver: req.solver,
            seq: self.dispatched,
            scheduler_iter: self.msg_count,
        };
        if let Some(n) = self.per_solver.get_mut(req.solver.0) {
            *n += 1;
        }
        self.events.emit(Event::Dispatch {
            seq: ticket.seq,
            scheduler_iter: ticket.scheduler_iter,
            solver: req.solver.0,
            evaluator: evaluator.0,
        });
        let msg = Message::new(
            AgentId::Scheduler,
            Body::EvaluatePoint(PointRequest {
                point: req.point,
                reply: req.reply.clone(),
                ticket: Some(ticket),
            }),
        );
        // An idle evaluator's mailbox is empty, so this never blocks.
        if self.links.evaluators[evaluator.0].put(msg).is_err() {
            req.reply.close();
        }
        Some(req.solver)
    }

    fn stage(&mut self, msg: Message) {
        match (&msg.from, &msg.body) {
            (AgentId::Solver(s), Body::EvaluatePoint(_)) => {
                if let Some(w) = self.waiting.get_mut(s.0) {
                    *w = true;
                }
            }
            (_, Body::RequestPoint(_)) => self.staged_idle += 1,
            (_, Body::AnalyseSolution(Analysed::Improved(_) | Analysed::Unchanged { .. })) => {
                self.unacknowledged = self.unacknowledged.saturating_sub(1);
            }
            _ => {}
        }
        self.staged.push(msg);
        if self.quiescent() {
            self.process_staged();
            if self.may_dispatch() {
                if let Some(solver) = self.dispatch_one() {
                    self.waiting[solver.0] = false;
                    self.unacknowledged += 1;
                }
            }
        }
    }

    fn quiescent(&self) -> bool {
        self.unacknowledged == 0
            && self.idle.len() + self.staged_idle == self.links.evaluators.len()
            && self.waiting.iter().all(|&w| w)
    }

    fn process_staged(&mut self) {
        let mut staged = std::mem::take(&mut self.staged);
        staged.sort_by_key(canonical_key);
        self.staged_idle = 0;
        for msg in staged {
            self.handle(msg);
        }
    }

    fn teardown(mut self, reason: StopReason) -> SchedulerReport {
        // Staged messages still need their side effects: idle evaluators must
        // be known and pending proxies released.
        let staged = std::mem::take(&mut self.staged);
        self.staged_idle = 0;
        for msg in staged {
            match msg.body {
                Body::RequestPoint(id) => {
                    self.idle.push(id);
                }
                Body::EvaluatePoint(req) => req.reply.close(),
                _ => {}
            }
        }
        for req in self.queues.drain_all() {
            req.reply.close();
        }

        // Let in-flight evaluations finish so the analysis agent sees them
        // before the final query.
        let mut teardown_messages = 0;
        if reason != StopReason::Aborted {
            while self.idle.len() < self.links.evaluators.len() {
                let Ok(msg) = self.links.inbox.take() else {
                    break;
                };
                teardown_messages += 1;
                match msg.body {
                    Body::RequestPoint(id) => {
                        self.idle.push(id);
                    }
                    Body::EvaluatePoint(req) => req.reply.close(),
                    _ => {}
                }
            }
        }

        self.links.inbox.close();
        for msg in self.links.inbox.drain() {
            teardown_messages += 1;
            if let Body::EvaluatePoint(req) = msg.body {
                req.reply.close();
            }
        }
        for mb in &self.links.evaluators {
            mb.close();
        }

        let archive = self.retrieve_archive();
        self.links.analysis.close();
        for mb in &self.links.solvers {
            mb.close();
        }

        self.events.emit(Event::Termination {
            reason: format!("{reason:?}"),
            messages: self.msg_count,
            dispatched: self.dispatched,
            teardown_messages,
        });
        SchedulerReport {
            archive,
            reason,
            messages: self.msg_count,
            teardown_messages,
            dispatched: self.dispatched,
            per_solver: self.per_solver,
            broadcasts: self.broadcasts,
            shares_delivered: self.shares_delivered,
            shares_dropped: self.shares_dropped,
        }
    }

    fn retrieve_archive(&self) -> Archive {
        let reply = reply_box();
        let query = Message::new(AgentId::Scheduler, Body::RetrieveBest(reply.clone()));
        if self.links.analysis.put(query).is_ok() {
            while let Ok(msg) = reply.take() {
                if let Body::StatisticsBest(archive) = msg.body {
                    return *archive;
                }
            }
        }
        Archive::new(self.cfg.archive_mode)
    }
}

fn canonical_key(msg: &Message) -> (u8, u64) {
    match (&msg.from, &msg.body) {
        (_, Body::AnalyseSolution(Analysed::Improved(e))) => (0, e.seq),
        (_, Body::AnalyseSolution(Analysed::Unchanged { seq })) => (0, *seq),
        (_, Body::RequestPoint(EvaluatorId(id))) => (1, *id as u64),
        (AgentId::Solver(s), Body::EvaluatePoint(_)) => (2, s.0 as u64),
        _ => (3, 0),
    }
}

/// Runs the scheduler to completion.
pub fn scheduler_loop(scheduler: Scheduler) -> SchedulerReport {
    scheduler.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messaging::Capacities;
    use std::thread;

    fn links(n_solvers: usize, n_evaluators: usize) -> SchedulerLinks {
        let caps = Capacities::for_run(n_solvers, n_evaluators);
        SchedulerLinks {
            inbox: Mailbox::new(caps.scheduler),
            evaluators: (0..n_evaluators).map(|_| Mailbox::new(caps.evaluator)).collect(),
            solvers: (0..n_solvers).map(|_| Mailbox::new(caps.share)).collect(),
            analysis: Mailbox::new(caps.analysis),
        }
    }

    fn cfg(budget: Budget, n_solvers: usize) -> SchedulerConfig {
        SchedulerConfig {
            budget,
            sharing: true,
            deterministic: false,
            priorities: vec![Priority::LOWEST; n_solvers],
            archive_mode: ArchiveMode::Single,
        }
    }

    /// Answers RETRIEVEBEST with an empty archive.
    fn fake_analysis(mb: Mailbox<Message>) -> thread::JoinHandle<()> {
        thread::spawn(move || {
            while let Ok(msg) = mb.take() {
                if let Body::RetrieveBest(reply) = msg.body {
                    let _ = reply.put(Message::new(
                        AgentId::Analysis,
                        Body::StatisticsBest(Box::new(Archive::new(ArchiveMode::Single))),
                    ));
                }
            }
        })
    }

    #[test]
    fn zero_budget_returns_empty_archive() {
        let l = links(1, 1);
        let analysis = fake_analysis(l.analysis.clone());
        // the evaluator's initial announcement is needed for a clean drain
        l.inbox
            .put(Message::new(
                AgentId::Evaluator(EvaluatorId(0)),
                Body::RequestPoint(EvaluatorId(0)),
            ))
            .unwrap();
        let report = Scheduler::new(cfg(Budget::Messages(0), 1), l.clone(), EventLog::new()).run();
        analysis.join().unwrap();
        assert_eq!(report.messages, 0);
        assert_eq!(report.dispatched, 0);
        assert!(report.archive.is_empty());
        assert!(l.inbox.is_closed());
    }

    #[test]
    fn one_request_one_idle_evaluator_dispatches_once() {
        let l = links(1, 1);
        let analysis = fake_analysis(l.analysis.clone());
        let reply = reply_box();
        l.inbox
            .put(Message::new(
                AgentId::Solver(SolverId(0)),
                Body::EvaluatePoint(PointRequest {
                    point: Point::new(vec![1.0]),
                    reply: reply.clone(),
                    ticket: None,
                }),
            ))
            .unwrap();
        l.inbox
            .put(Message::new(
                AgentId::Evaluator(EvaluatorId(0)),
                Body::RequestPoint(EvaluatorId(0)),
            ))
            .unwrap();
        // a second announcement lets teardown's drain finish
        let evaluator = l.evaluators[0].clone();
        let inbox = l.inbox.clone();
        let fake_eval = thread::spawn(move || {
            let mut got = Vec::new();
            while let Ok(msg) = evaluator.take() {
                if let Body::EvaluatePoint(req) = msg.body {
                    got.push(req.ticket.unwrap());
                    let _ = inbox.put(Message::new(
                        AgentId::Evaluator(EvaluatorId(0)),
                        Body::RequestPoint(EvaluatorId(0)),
                    ));
                }
            }
            got
        });
        let events = EventLog::new();
        let report = Scheduler::new(cfg(Budget::Messages(2), 1), l, events.clone()).run();
        analysis.join().unwrap();
        let tickets = fake_eval.join().unwrap();
        assert_eq!(report.dispatched, 1);
        assert_eq!(tickets.len(), 1);
        assert_eq!(tickets[0].seq, 1);
        assert_eq!(tickets[0].solver, SolverId(0));
        let dispatches = events
            .snapshot()
            .into_iter()
            .filter(|e| matches!(e, Event::Dispatch { .. }))
            .count();
        assert_eq!(dispatches, 1);
    }

    #[test]
    fn improvement_is_broadcast_only_when_sharing() {
        for sharing in [true, false] {
            let l = links(2, 1);
            let analysis = fake_analysis(l.analysis.clone());
            let e = crate::evaluation::eval(&[1.0], -1.0);
            l.inbox
                .put(Message::new(
                    AgentId::Analysis,
                    Body::AnalyseSolution(Analysed::Improved(e)),
                ))
                .unwrap();
            l.inbox
                .put(Message::new(
                    AgentId::Evaluator(EvaluatorId(0)),
                    Body::RequestPoint(EvaluatorId(0)),
                ))
                .unwrap();
            let mut c = cfg(Budget::Messages(2), 2);
            c.sharing = sharing;
            let share0 = l.solvers[0].clone();
            let report = Scheduler::new(c, l, EventLog::new()).run();
            analysis.join().unwrap();
            let expected = if sharing { 2 } else { 0 };
            assert_eq!(report.shares_delivered, expected);
            assert_eq!(share0.drain().len(), if sharing { 1 } else { 0 });
        }
    }

    #[test]
    fn full_share_mailbox_drops_oldest() {
        let mut l = links(1, 1);
        l.inbox = Mailbox::new(8);
        let analysis = fake_analysis(l.analysis.clone());
        for seq in 1..=6 {
            let mut e = crate::evaluation::eval(&[10.0 - seq as f64], -1.0);
            e.seq = seq;
            l.inbox
                .put(Message::new(
                    AgentId::Analysis,
                    Body::AnalyseSolution(Analysed::Improved(e)),
                ))
                .unwrap();
        }
        l.inbox
            .put(Message::new(
                AgentId::Evaluator(EvaluatorId(0)),
                Body::RequestPoint(EvaluatorId(0)),
            ))
            .unwrap();
        let share = l.solvers[0].clone();
        let report = Scheduler::new(cfg(Budget::Messages(7), 1), l, EventLog::new()).run();
        analysis.join().unwrap();
        assert_eq!(report.shares_dropped, 2);
        let seqs: Vec<u64> = share
            .drain()
            .into_iter()
            .map(|m| match m.body {
                Body::ShareBest(e) => e.seq,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(seqs, [3, 4, 5, 6]);
    }

    #[test]
    fn queued_requests_are_released_at_teardown() {
        let l = links(1, 1);
        let analysis = fake_analysis(l.analysis.clone());
        let reply = reply_box();
        l.inbox
            .put(Message::new(
                AgentId::Solver(SolverId(0)),
                Body::EvaluatePoint(PointRequest {
                    point: Point::new(vec![0.0]),
                    reply: reply.clone(),
                    ticket: None,
                }),
            ))
            .unwrap();
        l.inbox
            .put(Message::new(
                AgentId::Evaluator(EvaluatorId(0)),
                Body::RequestPoint(EvaluatorId(0)),
            ))
            .unwrap();
        // budget of one message: the request is queued but never dispatched
        let report = Scheduler::new(cfg(Budget::Messages(1), 1), l, EventLog::new()).run();
        analysis.join().unwrap();
        assert_eq!(report.dispatched, 0);
        assert_eq!(reply.take().map(|_| ()), Err(Closed));
    }
}
