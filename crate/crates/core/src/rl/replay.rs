use crate::escape::OBS_DIM;
use crate::rng::Prng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub obs: [f32; OBS_DIM],
    pub action: u8,
    pub reward: f32,
    pub next_obs: [f32; OBS_DIM],
    pub done: bool,
}

/// Fixed-capacity FIFO ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), head: 0 }
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

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Oldest-first view.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items[self.head..].iter().chain(&self.items[..self.head])
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, n: usize, rng: &mut Prng) -> Vec<&'a Transition> {
        assert!(!self.items.is_empty(), "cannot sample an empty buffer");
        (0..n).map(|_| &self.items[rng.index(self.items.len())]).collect()
    }
}
