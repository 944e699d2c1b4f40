//! The analysis agent keeps the incumbent: a single best evaluation for one
//! objective, or the set of mutually non-dominated evaluations otherwise.
//! Every improvement is reported to the scheduler, which decides whether to
//! share it.

use serde::Serialize;

use crate::evaluation::{better, dominates_unchecked, Evaluation};
use crate::events::{Event, EventLog};
use crate::messaging::{AgentId, Analysed, Body, Mailbox, Message};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArchiveMode {
    Single,
    Multi,
}

impl ArchiveMode {
    pub fn for_objectives(n_obj: usize) -> Self {
        if n_obj > 1 {
            ArchiveMode::Multi
        } else {
            ArchiveMode::Single
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub seq: u64,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Archive {
    mode: ArchiveMode,
    best: Option<Evaluation>,
    front: Vec<Evaluation>,
    history: Vec<Improvement>,
}

impl Archive {
    pub fn new(mode: ArchiveMode) -> Self {
        Archive {
            mode,
            best: None,
            front: Vec::new(),
            history: Vec::new(),
        }
    }

    pub fn mode(&self) -> ArchiveMode {
        self.mode
    }

    pub fn best(&self) -> Option<&Evaluation> {
        self.best.as_ref()
    }

    pub fn front(&self) -> &[Evaluation] {
        &self.front
    }

    /// Current members: the best (single) or the front (multi).
    pub fn members(&self) -> Vec<&Evaluation> {
        match self.mode {
            ArchiveMode::Single => self.best.iter().collect(),
            ArchiveMode::Multi => self.front.iter().collect(),
        }
    }

    pub fn history(&self) -> &[Improvement] {
        &self.history
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_none() && self.front.is_empty()
    }

    /// Offers `e` to the archive; returns whether it was accepted.
    pub fn update(&mut self, e: Evaluation) -> bool {
        let improved = match self.mode {
            ArchiveMode::Single => match &self.best {
                Some(b) if !better(&e, b) => false,
                _ => {
                    self.best = Some(e.clone());
                    true
                }
            },
            ArchiveMode::Multi => {
                // duplicates of a member keep the first arrival
                if self
                    .front
                    .iter()
                    .any(|m| dominates_unchecked(m, &e) || m.same_value(&e))
                {
                    false
                } else {
                    self.front.retain(|m| !dominates_unchecked(&e, m));
                    self.front.push(e.clone());
                    true
                }
            }
        };
        if improved {
            self.history.push(Improvement {
                seq: e.seq,
                evaluation: e,
            });
        }
        improved
    }
}

pub fn update_archive(archive: &mut Archive, e: Evaluation) -> bool {
    archive.update(e)
}

/// Runs the analysis agent until its mailbox is closed and empty. When
/// `acknowledge_all` is set every evaluation gets a verdict (deterministic
/// runs); otherwise only improvements are reported. Returns the final
/// archive.
pub fn analysis_loop(
    mode: ArchiveMode,
    inbox: Mailbox<Message>,
    scheduler: Mailbox<Message>,
    acknowledge_all: bool,
    events: EventLog,
) -> Archive {
    let mut archive = Archive::new(mode);
    while let Ok(msg) = inbox.take() {
        match msg.body {
            Body::AnalyseSolution(Analysed::Evaluated(e)) => {
                let seq = e.seq;
                let verdict = if archive.update(e.clone()) {
                    events.emit(Event::Improvement {
                        seq,
                        scheduler_iter: e.scheduler_iter,
                        solver: e.solver.0,
                        z: e.z.clone(),
                        g: e.g,
                    });
                    Some(Analysed::Improved(e))
                } else if acknowledge_all {
                    Some(Analysed::Unchanged { seq })
                } else {
                    None
                };
                if let Some(v) = verdict {
                    // The scheduler stops listening at teardown; keep serving
                    // queries regardless.
                    let _ = scheduler.put(Message::new(AgentId::Analysis, Body::AnalyseSolution(v)));
                }
            }
            Body::RetrieveBest(reply) => {
                let _ = reply.put(Message::new(
                    AgentId::Analysis,
                    Body::StatisticsBest(Box::new(archive.clone())),
                ));
            }
            _ => {}
        }
    }
    archive
}
