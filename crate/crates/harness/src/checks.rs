//! Conservation checks over a run's event log.

use std::collections::BTreeMap;

use agentopt::events::Event;
use agentopt::messaging::MessageKind;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvaluatorCounts {
    pub dispatched: u64,
    pub objective_values: u64,
    pub analyse_solutions: u64,
    pub request_points: u64,
}

pub fn evaluator_counts(events: &[Event]) -> BTreeMap<usize, EvaluatorCounts> {
    let mut out: BTreeMap<usize, EvaluatorCounts> = BTreeMap::new();
    for e in events {
        match e {
            Event::Dispatch { evaluator, .. } => out.entry(*evaluator).or_default().dispatched += 1,
            Event::EvaluatorSent { evaluator, kind, .. } => {
                let c = out.entry(*evaluator).or_default();
                match kind {
                    MessageKind::ObjectiveValue => c.objective_values += 1,
                    MessageKind::AnalyseSolution => c.analyse_solutions += 1,
                    MessageKind::RequestPoint => c.request_points += 1,
                    _ => {}
                }
            }
            _ => {}
        }
    }
    out
}

/// Returns one message per violated invariant; empty means the run is sound.
///
/// Every dispatched point yields one OBJECTIVEVALUE and one ANALYSESOLUTION,
/// and each evaluator announces itself once more than it was dispatched to.
pub fn conservation(events: &[Event]) -> Vec<String> {
    let mut bad = Vec::new();
    for (id, c) in evaluator_counts(events) {
        if c.dispatched != c.objective_values || c.objective_values != c.analyse_solutions {
            bad.push(format!(
                "evaluator {id}: {} dispatched, {} objective values, {} analysed",
                c.dispatched, c.objective_values, c.analyse_solutions
            ));
        }
        if c.request_points != c.dispatched + 1 {
            bad.push(format!(
                "evaluator {id}: {} announcements for {} dispatches",
                c.request_points, c.dispatched
            ));
        }
    }
    for e in events {
        match e {
            Event::Mailbox { name, stats } if !stats.conserved() => {
                bad.push(format!("mailbox {name}: {stats:?} not conserved"));
            }
            Event::Proxy {
                solver,
                requests,
                replies,
            } if replies > requests || requests - replies > 1 => {
                bad.push(format!("solver {solver}: {requests} requests, {replies} replies"));
            }
            _ => {}
        }
    }
    bad
}

pub fn dispatch_total(events: &[Event]) -> u64 {
    events.iter().filter(|e| matches!(e, Event::Dispatch { .. })).count() as u64
}

pub fn broadcasts(events: &[Event]) -> Vec<(usize, usize)> {
    events
        .iter()
        .filter_map(|e| match e {
            Event::Broadcast { delivered, dropped, .. } => Some((*delivered, *dropped)),
            _ => None,
        })
        .collect()
}
