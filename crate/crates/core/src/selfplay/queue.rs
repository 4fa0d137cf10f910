//! Bounded multi-producer queue of whole trajectories.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a producer does when the queue is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backpressure {
    #[default]
    Block,
    DropOldest,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trajectory queue is closed")]
pub struct QueueClosed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PopError {
    #[error("no trajectory arrived within {0:?}")]
    Timeout(Duration),
    #[error("trajectory queue is closed and drained")]
    Closed,
}

struct Inner<T> {
    items: VecDeque<T>,
    closed: bool,
    dropped: u64,
}

pub struct TrajectoryQueue<T> {
    inner: Mutex<Inner<T>>,
    not_empty: Condvar,
    not_full: Condvar,
    capacity: usize,
    policy: Backpressure,
}

impl<T> TrajectoryQueue<T> {
    pub fn new(capacity: usize, policy: Backpressure) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        TrajectoryQueue {
            inner: Mutex::new(Inner {
                items: VecDeque::with_capacity(capacity),
                closed: false,
                dropped: 0,
            }),
            not_empty: Condvar::new(),
            not_full: Condvar::new(),
            capacity,
            policy,
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner<T>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Enqueues one item as a unit. Fails only once the queue is closed, in
    /// which case the item is dropped whole.
    pub fn push(&self, item: T) -> Result<(), QueueClosed> {
        let mut g = self.lock();
        loop {
            if g.closed {
                return Err(QueueClosed);
            }
            if g.items.len() < self.capacity {
                break;
            }
            match self.policy {
                Backpressure::Block => g = self.not_full.wait(g).unwrap_or_else(|e| e.into_inner()),
                Backpressure::DropOldest => {
                    g.items.pop_front();
                    g.dropped += 1;
                }
            }
        }
        g.items.push_back(item);
        drop(g);
        self.not_empty.notify_one();
        Ok(())
    }

    pub fn pop_timeout(&self, timeout: Duration) -> Result<T, PopError> {
        let deadline = Instant::now() + timeout;
        let mut g = self.lock();
        loop {
            if let Some(item) = g.items.pop_front() {
                drop(g);
                self.not_full.notify_one();
                return Ok(item);
            }
            if g.closed {
                return Err(PopError::Closed);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(PopError::Timeout(timeout));
            }
            g = self
                .not_empty
                .wait_timeout(g, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    /// Wakes every waiter; later pushes fail and pops drain what is left.
    pub fn close(&self) {
        self.lock().closed = true;
        self.not_empty.notify_all();
        self.not_full.notify_all();
    }

    pub fn len(&self) -> usize {
        self.lock().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.lock().dropped
    }
}
