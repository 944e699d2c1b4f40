use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::messaging::EvaluatorId;

/// Highest priority level.
pub const MAX_PRIORITY: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("priority {0} outside 1..={MAX_PRIORITY}")]
pub struct InvalidPriority(pub i64);

/// Request priority, `1..=MAX_PRIORITY`; larger is served first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Priority(u8);

impl Priority {
    pub const LOWEST: Priority = Priority(1);
    pub const HIGHEST: Priority = Priority(MAX_PRIORITY);

    pub fn new(level: i64) -> Result<Self, InvalidPriority> {
        if (1..=MAX_PRIORITY as i64).contains(&level) {
            Ok(Priority(level as u8))
        } else {
            Err(InvalidPriority(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }
}

impl Default for Priority {
    fn default() -> Self {
        Priority::LOWEST
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One FIFO per priority level. Taking a request promotes the head of every
/// level below the top by one level, so a waiting request reaches the top
/// after at most `MAX_PRIORITY - p` dispatches.
#[derive(Debug, Clone)]
pub struct PriorityQueues<T> {
    levels: Vec<VecDeque<T>>,
}

impl<T> Default for PriorityQueues<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> PriorityQueues<T> {
    pub fn new() -> Self {
        PriorityQueues {
            levels: (0..MAX_PRIORITY).map(|_| VecDeque::new()).collect(),
        }
    }

    pub fn enqueue(&mut self, priority: Priority, item: T) {
        self.levels[priority.0 as usize - 1].push_back(item);
    }

    /// Pops the head of the highest non-empty level, then promotes.
    pub fn pop(&mut self) -> Option<T> {
        let item = self.levels.iter_mut().rev().find_map(VecDeque::pop_front)?;
        self.promote();
        Some(item)
    }

    /// Moves the head of each level below the top up one level, sweeping from
    /// the second-highest level down so nothing moves twice.
    pub fn promote(&mut self) {
        for lvl in (0..self.levels.len() - 1).rev() {
            if let Some(head) = self.levels[lvl].pop_front() {
                self.levels[lvl + 1].push_back(head);
            }
        }
    }

    pub fn level(&self, priority: Priority) -> &VecDeque<T> {
        &self.levels[priority.0 as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(VecDeque::is_empty)
    }

    /// Empties every level, highest first.
    pub fn drain_all(&mut self) -> Vec<T> {
        self.levels
            .iter_mut()
            .rev()
            .flat_map(|q| q.drain(..))
            .collect()
    }
}

/// FIFO of idle evaluators; each id appears at most once.
#[derive(Debug, Clone, Default)]
pub struct EvaluatorQueue {
    idle: VecDeque<EvaluatorId>,
}

impl EvaluatorQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when `id` was already queued.
    pub fn push(&mut self, id: EvaluatorId) -> bool {
        if self.idle.contains(&id) {
            return false;
        }
        self.idle.push_back(id);
        true
    }

    pub fn pop(&mut self) -> Option<EvaluatorId> {
        self.idle.pop_front()
    }

    pub fn len(&self) -> usize {
        self.idle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idle.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(l: i64) -> Priority {
        Priority::new(l).unwrap()
    }

    fn contents(q: &PriorityQueues<&'static str>, l: i64) -> Vec<&'static str> {
        q.level(p(l)).iter().copied().collect()
    }

    #[test]
    fn priority_bounds() {
        assert!(Priority::new(0).is_err());
        assert!(Priority::new(11).is_err());
        assert_eq!(Priority::new(10).unwrap(), Priority::HIGHEST);
    }

    #[test]
    fn enqueue_places_at_level() {
        let mut q = PriorityQueues::new();
        q.enqueue(p(3), "r");
        assert_eq!(contents(&q, 3), ["r"]);
        q.enqueue(p(3), "r2");
        assert_eq!(contents(&q, 3), ["r", "r2"]);
        q.enqueue(p(10), "top");
        assert_eq!(q.level(Priority::HIGHEST).front(), Some(&"top"));
    }

    #[test]
    fn next_takes_highest_level() {
        let mut q = PriorityQueues::new();
        q.enqueue(p(4), "b");
        q.enqueue(p(10), "a");
        assert_eq!(q.pop(), Some("a"));
        // b was promoted from 4 to 5 by the dispatch
        assert_eq!(contents(&q, 5), ["b"]);
        assert_eq!(q.pop(), Some("b"));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn next_promotes_remaining_heads() {
        let mut q = PriorityQueues::new();
        q.enqueue(p(4), "b");
        q.enqueue(p(2), "c");
        q.enqueue(p(2), "d");
        assert_eq!(q.pop(), Some("b"));
        assert_eq!(contents(&q, 3), ["c"]);
        assert_eq!(contents(&q, 2), ["d"]);
    }

    #[test]
    fn promote_sweeps_high_to_low() {
        let mut q = PriorityQueues::new();
        q.enqueue(p(1), "r1");
        q.enqueue(p(1), "r2");
        q.enqueue(p(2), "r3");
        q.promote();
        assert_eq!(contents(&q, 1), ["r2"]);
        assert_eq!(contents(&q, 2), ["r1"]);
        assert_eq!(contents(&q, 3), ["r3"]);
    }

    #[test]
    fn top_level_is_never_promoted() {
        let mut q = PriorityQueues::new();
        q.enqueue(Priority::HIGHEST, "r");
        q.promote();
        assert_eq!(contents(&q, 10), ["r"]);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn nine_promotions_reach_the_top() {
        let mut q = PriorityQueues::new();
        q.enqueue(p(1), "r");
        for step in 1..=9 {
            q.promote();
            assert_eq!(contents(&q, 1 + step), ["r"], "after {step} promotions");
        }
        q.promote();
        assert_eq!(contents(&q, 10), ["r"]);
    }

    #[test]
    fn evaluator_queue_is_unique_fifo() {
        let mut e = EvaluatorQueue::new();
        assert!(e.push(EvaluatorId(1)));
        assert!(e.push(EvaluatorId(0)));
        assert!(!e.push(EvaluatorId(1)));
        assert_eq!(e.pop(), Some(EvaluatorId(1)));
        assert_eq!(e.pop(), Some(EvaluatorId(0)));
        assert_eq!(e.pop(), None);
    }
}
