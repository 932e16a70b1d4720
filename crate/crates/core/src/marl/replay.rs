use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::CacheAction;
use super::encode::GameState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: GameState,
    pub actions: Vec<CacheAction>,
    pub rewards: Vec<f64>,
    pub next: GameState,
}

/// Fixed-capacity ring buffer; the oldest entry is overwritten once full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    head: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::new(),
            capacity,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.head] = item;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn get(&self, index: usize) -> &T {
        &self.items[index]
    }

    /// Uniform minibatch of distinct indices (fewer if the buffer is short).
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        let n = batch.min(self.items.len());
        sample(rng, self.items.len(), n).into_vec()
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&T> {
        self.sample_indices(batch, rng)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}
