//! The message protocol connecting the agents.
//!
//! Every interaction between agents is a [`Message`] placed in a
//! [`Mailbox`]. Payloads are typed per [`MessageKind`]; the evaluation
//! reply path (the "wormhole") is a single-use mailbox of capacity one that
//! travels inside the request.

mod mailbox;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use mailbox::{Closed, Mailbox, MailboxStats};

use crate::analysis::Archive;
use crate::evaluation::{Evaluation, SolverId};
use crate::problem::Point;

/// Index of an evaluator agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EvaluatorId(pub usize);

impl fmt::Display for EvaluatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "evaluator-{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AgentId {
    Scheduler,
    Analysis,
    Evaluator(EvaluatorId),
    Solver(SolverId),
    Harness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    AnalyseSolution,
    EvaluatePoint,
    ObjectiveValue,
    RequestPoint,
    RetrieveBest,
    ShareBest,
    StatisticsBest,
}

impl MessageKind {
    pub const ALL: [MessageKind; 7] = [
        MessageKind::AnalyseSolution,
        MessageKind::EvaluatePoint,
        MessageKind::ObjectiveValue,
        MessageKind::RequestPoint,
        MessageKind::RetrieveBest,
        MessageKind::ShareBest,
        MessageKind::StatisticsBest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::AnalyseSolution => "ANALYSESOLUTION",
            MessageKind::EvaluatePoint => "EVALUATEPOINT",
            MessageKind::ObjectiveValue => "OBJECTIVEVALUE",
            MessageKind::RequestPoint => "REQUESTPOINT",
            MessageKind::RetrieveBest => "RETRIEVEBEST",
            MessageKind::ShareBest => "SHAREBEST",
            MessageKind::StatisticsBest => "STATISTICSBEST",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-use reply channel.
pub type ReplyBox = Mailbox<Message>;

pub fn reply_box() -> ReplyBox {
    Mailbox::new(1)
}

/// Assigned by the scheduler when a request is dispatched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ticket {
    pub solver: SolverId,
    pub seq: u64,
    pub scheduler_iter: u64,
}

#[derive(Debug, Clone)]
pub struct PointRequest {
    pub point: Point,
    pub reply: ReplyBox,
    /// `None` on the way from the solver; set on the way to the evaluator.
    pub ticket: Option<Ticket>,
}

/// Payload of ANALYSESOLUTION. The evaluator sends `Evaluated`; the analysis
/// agent answers the scheduler with `Improved`, or with `Unchanged` when
/// every verdict is acknowledged (deterministic runs).
#[derive(Debug, Clone)]
pub enum Analysed {
    Evaluated(Evaluation),
    Improved(Evaluation),
    Unchanged { seq: u64 },
}

#[derive(Debug, Clone)]
pub enum Body {
    AnalyseSolution(Analysed),
    EvaluatePoint(PointRequest),
    ObjectiveValue(Evaluation),
    RequestPoint(EvaluatorId),
    RetrieveBest(ReplyBox),
    ShareBest(Evaluation),
    StatisticsBest(Box<Archive>),
}

#[derive(Debug, Clone)]
pub struct Message {
    pub from: AgentId,
    pub body: Body,
}

impl Message {
    pub fn new(from: AgentId, body: Body) -> Self {
        Message { from, body }
    }

    pub fn kind(&self) -> MessageKind {
        match self.body {
            Body::AnalyseSolution(_) => MessageKind::AnalyseSolution,
            Body::EvaluatePoint(_) => MessageKind::EvaluatePoint,
            Body::ObjectiveValue(_) => MessageKind::ObjectiveValue,
            Body::RequestPoint(_) => MessageKind::RequestPoint,
            Body::RetrieveBest(_) => MessageKind::RetrieveBest,
            Body::ShareBest(_) => MessageKind::ShareBest,
            Body::StatisticsBest(_) => MessageKind::StatisticsBest,
        }
    }
}

/// Mailbox capacities for a run with the given agent counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capacities {
    pub scheduler: usize,
    pub analysis: usize,
    pub evaluator: usize,
    pub share: usize,
    pub reply: usize,
}

impl Capacities {
    pub fn for_run(n_solvers: usize, n_evaluators: usize) -> Self {
        Capacities {
            scheduler: 2 * (n_solvers + n_evaluators + 1),
            analysis: 2 * (n_evaluators + 1),
            evaluator: 1,
            share: 4,
            reply: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_kinds_with_protocol_names() {
        let names: Vec<_> = MessageKind::ALL.iter().map(|k| k.name()).collect();
        assert_eq!(
            names,
            [
                "ANALYSESOLUTION",
                "EVALUATEPOINT",
                "OBJECTIVEVALUE",
                "REQUESTPOINT",
                "RETRIEVEBEST",
                "SHAREBEST",
                "STATISTICSBEST"
            ]
        );
    }

    #[test]
    fn capacities_follow_agent_counts() {
        let c = Capacities::for_run(6, 4);
        assert_eq!(c.scheduler, 22);
        assert_eq!(c.analysis, 10);
        assert_eq!(c.share, 4);
        assert_eq!(c.reply, 1);
    }

    #[test]
    fn kind_matches_body() {
        let m = Message::new(AgentId::Evaluator(EvaluatorId(2)), Body::RequestPoint(EvaluatorId(2)));
        assert_eq!(m.kind(), MessageKind::RequestPoint);
        let r = reply_box();
        let m = Message::new(AgentId::Scheduler, Body::RetrieveBest(r));
        assert_eq!(m.kind(), MessageKind::RetrieveBest);
    }
}
