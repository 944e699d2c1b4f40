use std::collections::VecDeque;
use std::fmt;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The mailbox has been shut down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("mailbox closed")]
pub struct Closed;

/// Traffic counters for one mailbox.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailboxStats {
    pub puts: u64,
    pub takes: u64,
    pub dropped: u64,
    pub queued: u64,
}

impl MailboxStats {
    /// Every message put is either taken, still queued, or was evicted.
    pub fn conserved(&self) -> bool {
        self.puts == self.takes + self.queued + self.dropped
    }
}

struct State<T> {
    queue: VecDeque<T>,
    closed: bool,
    puts: u64,
    takes: u64,
    dropped: u64,
}

struct Shared<T> {
    state: Mutex<State<T>>,
    readable: Condvar,
    writable: Condvar,
    capacity: usize,
}

/// Bounded multi-producer multi-consumer FIFO with blocking `put`/`take`
/// and an explicit close. Cloning yields another handle to the same queue.
///
/// After `close`, `put` fails immediately and `take` keeps returning queued
/// messages until the queue is empty.
pub struct Mailbox<T> {
    shared: Arc<Shared<T>>,
}

impl<T> Clone for Mailbox<T> {
    fn clone(&self) -> Self {
        Mailbox {
            shared: Arc::clone(&self.shared),
        }
    }
}

impl<T> fmt::Debug for Mailbox<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let st = self.lock();
        f.debug_struct("Mailbox")
            .field("capacity", &self.shared.capacity)
            .field("queued", &st.queue.len())
            .field("closed", &st.closed)
            .finish()
    }
}

impl<T> Mailbox<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "mailbox capacity must be positive");
        Mailbox {
            shared: Arc::new(Shared {
                state: Mutex::new(State {
                    queue: VecDeque::with_capacity(capacity),
                    closed: false,
                    puts: 0,
                    takes: 0,
                    dropped: 0,
                }),
                readable: Condvar::new(),
                writable: Condvar::new(),
                capacity,
            }),
        }
    }

    // A panicking holder cannot leave the queue half-updated, so a poisoned
    // lock is still usable.
    fn lock(&self) -> MutexGuard<'_, State<T>> {
        self.shared
            .state
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn capacity(&self) -> usize {
        self.shared.capacity
    }

    /// Appends `msg`, blocking while the mailbox is full.
    pub fn put(&self, msg: T) -> Result<(), Closed> {
        let mut st = self.lock();
        loop {
            if st.closed {
                return Err(Closed);
            }
            if st.queue.len() < self.shared.capacity {
                break;
            }
            st = self
                .shared
                .writable
                .wait(st)
                .unwrap_or_else(|p| p.into_inner());
        }
        st.queue.push_back(msg);
        st.puts += 1;
        drop(st);
        self.shared.readable.notify_one();
        Ok(())
    }

    /// Appends without blocking; when full, the oldest message is evicted and
    /// returned.
    pub fn put_evicting(&self, msg: T) -> Result<Option<T>, Closed> {
        let mut st = self.lock();
        if st.closed {
            return Err(Closed);
        }
        let evicted = if st.queue.len() >= self.shared.capacity {
            st.dropped += 1;
            st.queue.pop_front()
        } else {
            None
        };
        st.queue.push_back(msg);
        st.puts += 1;
        drop(st);
        self.shared.readable.notify_one();
        Ok(evicted)
    }

    /// Removes the oldest message, blocking while the mailbox is empty and
    /// open.
    pub fn take(&self) -> Result<T, Closed> {
        let mut st = self.lock();
        loop {
            if let Some(msg) = st.queue.pop_front() {
                st.takes += 1;
                drop(st);
                self.shared.writable.notify_one();
                return Ok(msg);
            }
            if st.closed {
                return Err(Closed);
            }
            st = self
                .shared
                .readable
                .wait(st)
                .unwrap_or_else(|p| p.into_inner());
        }
    }

    pub fn try_take(&self) -> Option<T> {
        let mut st = self.lock();
        let msg = st.queue.pop_front();
        if msg.is_some() {
            st.takes += 1;
            drop(st);
            self.shared.writable.notify_one();
        }
        msg
    }

    /// Takes everything currently queued without blocking.
    pub fn drain(&self) -> Vec<T> {
        let mut st = self.lock();
        let out: Vec<T> = st.queue.drain(..).collect();
        st.takes += out.len() as u64;
        drop(st);
        self.shared.writable.notify_all();
        out
    }

    /// Shuts the mailbox and wakes every blocked producer and consumer.
    pub fn close(&self) {
        let mut st = self.lock();
        st.closed = true;
        drop(st);
        self.shared.readable.notify_all();
        self.shared.writable.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }

    pub fn len(&self) -> usize {
        self.lock().queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> MailboxStats {
        let st = self.lock();
        MailboxStats {
            puts: st.puts,
            takes: st.takes,
            dropped: st.dropped,
            queued: st.queue.len() as u64,
        }
    }
}
