//! Structured run events. Agents emit into a shared [`EventLog`]; the harness
//! serializes them one JSON object per line.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::messaging::{MailboxStats, MessageKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Dispatch {
        seq: u64,
        scheduler_iter: u64,
        solver: usize,
        evaluator: usize,
    },
    Broadcast {
        seq: u64,
        origin: usize,
        delivered: usize,
        dropped: usize,
    },
    Termination {
        reason: String,
        messages: u64,
        dispatched: u64,
        teardown_messages: u64,
    },
    /// One message sent by an evaluator.
    EvaluatorSent {
        evaluator: usize,
        kind: MessageKind,
        seq: Option<u64>,
    },
    Improvement {
        seq: u64,
        scheduler_iter: u64,
        solver: usize,
        z: Vec<f64>,
        g: f64,
    },
    SolverStart {
        solver: usize,
        label: String,
        population: usize,
        fingerprint: u64,
    },
    Injection {
        solver: usize,
        received: usize,
        size_before: usize,
        size_after: usize,
    },
    /// A solver saw a value better than anything it had seen itself.
    Claim {
        solver: usize,
        seq: u64,
        z: Vec<f64>,
        g: f64,
    },
    GradientWarning {
        solver: usize,
        component: usize,
    },
    DescentStart {
        solver: usize,
        shared: bool,
        pending_starts: usize,
    },
    SolverExit {
        solver: usize,
        evaluations: u64,
    },
    Mailbox {
        name: String,
        stats: MailboxStats,
    },
    Proxy {
        solver: usize,
        requests: u64,
        replies: u64,
    },
}

/// Cloneable handle to a shared, append-only event list.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    inner: Option<Arc<Mutex<Vec<Event>>>>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog {
            inner: Some(Arc::new(Mutex::new(Vec::new()))),
        }
    }

    /// A sink that discards everything.
    pub fn disabled() -> Self {
        EventLog { inner: None }
    }

    pub fn is_enabled(&self) -> bool {
        self.inner.is_some()
    }

    pub fn emit(&self, event: Event) {
        if let Some(inner) = &self.inner {
            inner
                .lock()
                .unwrap_or_else(|p| p.into_inner())
                .push(event);
        }
    }

    pub fn snapshot(&self) -> Vec<Event> {
        match &self.inner {
            Some(inner) => inner.lock().unwrap_or_else(|p| p.into_inner()).clone(),
            None => Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.inner {
            Some(inner) => inner.lock().unwrap_or_else(|p| p.into_inner()).len(),
            None => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
