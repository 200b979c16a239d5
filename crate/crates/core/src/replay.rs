//! Fixed-capacity FIFO experience store with uniform random sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("buffer holds {have} transitions, need at least {need}")]
    Underfull { have: usize, need: usize },
}

/// One experience tuple `(s, a, r, s', done)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: [f64; 6],
    pub action: [f64; 2],
    pub reward: f64,
    pub next_state: [f64; 6],
    pub done: bool,
}

/// Ring buffer over transitions. Once full, each push evicts the oldest;
/// sampling is uniform with replacement from whatever is stored.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity >= 1, "capacity must be at least 1");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 20)),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    /// Uniform sample with replacement; deterministic given the buffer's seed
    /// and call history. Sampling with replacement makes batches larger than
    /// the store well-defined, so only an empty buffer is an error.
    pub fn sample(&mut self, batch: usize) -> Result<Vec<Transition>, ReplayError> {
        if self.items.is_empty() {
            return Err(ReplayError::Underfull {
                have: 0,
                need: batch.max(1),
            });
        }
        Ok((0..batch)
            .map(|_| self.items[self.rng.gen_range(0..self.items.len())])
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}
