//! Fixed-capacity FIFO experience replay with uniform sampling.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use thiserror::Error;

use crate::model::TrainingSample;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("cannot sample from an empty replay buffer")]
    Empty,
    #[error("replay capacity must be positive")]
    ZeroCapacity,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    samples: VecDeque<TrainingSample>,
    total_added: u64,
    // live samples per trajectory id
    per_trajectory: HashMap<u64, usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self, ReplayError> {
        if capacity == 0 {
            return Err(ReplayError::ZeroCapacity);
        }
        Ok(ReplayBuffer {
            capacity,
            samples: VecDeque::with_capacity(capacity.min(1 << 20)),
            total_added: 0,
            per_trajectory: HashMap::new(),
        })
    }

    pub fn add(&mut self, sample: TrainingSample) {
        if self.samples.len() == self.capacity {
            if let Some(old) = self.samples.pop_front() {
                self.release(old.trajectory_id);
            }
        }
        *self.per_trajectory.entry(sample.trajectory_id).or_insert(0) += 1;
        self.samples.push_back(sample);
        self.total_added += 1;
    }

    fn release(&mut self, id: u64) {
        if let Some(n) = self.per_trajectory.get_mut(&id) {
            *n -= 1;
            if *n == 0 {
                self.per_trajectory.remove(&id);
            }
        }
    }

    /// `batch_size` samples drawn uniformly with replacement.
    pub fn sample_batch<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<TrainingSample>, ReplayError> {
        if self.samples.is_empty() {
            return Err(ReplayError::Empty);
        }
        let n = self.samples.len();
        Ok((0..batch_size)
            .map(|_| self.samples[rng.random_range(0..n)].clone())
            .collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total_added(&self) -> u64 {
        self.total_added
    }

    /// Number of distinct trajectories with at least one sample in the buffer,
    /// i.e. the number of independent value targets available.
    pub fn distinct_trajectories(&self) -> usize {
        self.per_trajectory.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TrainingSample> {
        self.samples.iter()
    }
}
