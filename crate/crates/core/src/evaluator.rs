//! Model-evaluation agents. Each one announces itself to the scheduler,
//! evaluates the point it is handed, replies to the requesting solver and
//! copies the result to the analysis agent.

use std::sync::Arc;

use serde::Serialize;

use crate::evaluation::{Evaluation, SolverId};
use crate::events::{Event, EventLog};
use crate::messaging::{AgentId, Analysed, Body, EvaluatorId, Mailbox, Message, MessageKind};
use crate::problem::{evaluate_or_sentinel, Problem};

/// Messages sent by one evaluator over its lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvaluatorStats {
    pub request_points: u64,
    pub objective_values: u64,
    pub analyse_solutions: u64,
}

/// Runs until any of its mailboxes is shut down.
pub fn evaluator_loop(
    id: EvaluatorId,
    problem: Arc<Problem>,
    inbox: Mailbox<Message>,
    scheduler: Mailbox<Message>,
    analysis: Mailbox<Message>,
    events: EventLog,
) -> EvaluatorStats {
    let me = AgentId::Evaluator(id);
    let mut stats = EvaluatorStats::default();
    let sent = |kind, seq| {
        events.emit(Event::EvaluatorSent {
            evaluator: id.0,
            kind,
            seq,
        })
    };
    loop {
        if scheduler.put(Message::new(me, Body::RequestPoint(id))).is_err() {
            break;
        }
        stats.request_points += 1;
        sent(MessageKind::RequestPoint, None);

        let Ok(msg) = inbox.take() else { break };
        let Body::EvaluatePoint(req) = msg.body else {
            continue;
        };
        let ticket = req.ticket.unwrap_or(crate::messaging::Ticket {
            solver: match msg.from {
                AgentId::Solver(s) => s,
                _ => SolverId(usize::MAX),
            },
            seq: 0,
            scheduler_iter: 0,
        });
        let outcome = evaluate_or_sentinel(&problem, &req.point);
        let e = Evaluation::from_outcome(outcome, ticket.solver, ticket.seq, ticket.scheduler_iter);

        if req
            .reply
            .put(Message::new(me, Body::ObjectiveValue(e.clone())))
            .is_err()
        {
            break;
        }
        stats.objective_values += 1;
        sent(MessageKind::ObjectiveValue, Some(e.seq));

        let seq = e.seq;
        if analysis
            .put(Message::new(me, Body::AnalyseSolution(Analysed::Evaluated(e))))
            .is_err()
        {
            break;
        }
        stats.analyse_solutions += 1;
        sent(MessageKind::AnalyseSolution, Some(seq));
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messaging::{reply_box, PointRequest, Ticket};
    use crate::problem::{Domain, Point};
    use std::thread;

    fn linear() -> Arc<Problem> {
        Arc::new(
            Problem::new(
                "linear",
                Domain::uniform(2, -10.0, 10.0).unwrap(),
                1,
                |d: &[f64]| (vec![d.iter().sum()], -1.0),
            )
            .unwrap(),
        )
    }

    fn request(x: f64, seq: u64) -> (Message, Mailbox<Message>) {
        let reply = reply_box();
        let msg = Message::new(
            AgentId::Scheduler,
            Body::EvaluatePoint(PointRequest {
                point: Point::new(vec![x, 1.0]),
                reply: reply.clone(),
                ticket: Some(Ticket {
                    solver: SolverId(3),
                    seq,
                    scheduler_iter: seq * 2,
                }),
            }),
        );
        (msg, reply)
    }

    #[test]
    fn one_dispatch_yields_one_reply_and_one_analysis_copy() {
        let inbox = Mailbox::new(1);
        let sched = Mailbox::new(8);
        let analysis = Mailbox::new(8);
        let handle = {
            let (i, s, a) = (inbox.clone(), sched.clone(), analysis.clone());
            thread::spawn(move || evaluator_loop(EvaluatorId(0), linear(), i, s, a, EventLog::disabled()))
        };
        assert!(matches!(sched.take().unwrap().body, Body::RequestPoint(EvaluatorId(0))));
        let (msg, reply) = request(2.0, 7);
        inbox.put(msg).unwrap();
        let objective = match reply.take().unwrap().body {
            Body::ObjectiveValue(e) => e,
            _ => panic!(),
        };
        assert_eq!(objective.z, vec![3.0]);
        assert_eq!(objective.solver, SolverId(3));
        assert_eq!(objective.seq, 7);
        let copied = match analysis.take().unwrap().body {
            Body::AnalyseSolution(Analysed::Evaluated(e)) => e,
            _ => panic!(),
        };
        assert_eq!(copied, objective);
        // it announces itself again, then waits; closing the inbox stops it
        assert!(matches!(sched.take().unwrap().body, Body::RequestPoint(_)));
        inbox.close();
        let stats = handle.join().unwrap();
        assert_eq!(stats.request_points, 2);
        assert_eq!(stats.objective_values, 1);
        assert_eq!(stats.analyse_solutions, 1);
    }

    #[test]
    fn shutdown_while_waiting_emits_nothing() {
        let inbox = Mailbox::new(1);
        let sched = Mailbox::new(8);
        let analysis = Mailbox::new(8);
        let handle = {
            let (i, s, a) = (inbox.clone(), sched.clone(), analysis.clone());
            thread::spawn(move || evaluator_loop(EvaluatorId(1), linear(), i, s, a, EventLog::disabled()))
        };
        sched.take().unwrap();
        inbox.close();
        let stats = handle.join().unwrap();
        assert_eq!(stats.objective_values, 0);
        assert!(analysis.is_empty());
    }

    #[test]
    fn failed_model_still_reports_sentinel_to_both() {
        let failing = Arc::new(
            Problem::new(
                "nan",
                Domain::uniform(2, -1.0, 1.0).unwrap(),
                1,
                |_: &[f64]| (vec![f64::NAN], 0.0),
            )
            .unwrap(),
        );
        let inbox = Mailbox::new(1);
        let sched = Mailbox::new(8);
        let analysis = Mailbox::new(8);
        let handle = {
            let (i, s, a) = (inbox.clone(), sched.clone(), analysis.clone());
            thread::spawn(move || evaluator_loop(EvaluatorId(0), failing, i, s, a, EventLog::disabled()))
        };
        sched.take().unwrap();
        let (msg, reply) = request(0.0, 1);
        inbox.put(msg).unwrap();
        match reply.take().unwrap().body {
            Body::ObjectiveValue(e) => assert_eq!(e.g, f64::INFINITY),
            _ => panic!(),
        }
        match analysis.take().unwrap().body {
            Body::AnalyseSolution(Analysed::Evaluated(e)) => assert!(!e.feasible()),
            _ => panic!(),
        }
        inbox.close();
        sched.close();
        handle.join().unwrap();
    }
}
