//! Prioritized experience replay with sum-tree proportional sampling
//! and importance-sampling weights.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug)]
pub enum ReplayError {
    NotReady { have: usize, need: usize },
}

impl fmt::Display for ReplayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayError::NotReady { have, need } => {
                write!(f, "replay buffer holds {have} transitions, batch needs {need}")
            }
        }
    }
}

impl std::error::Error for ReplayError {}

#[derive(Debug, Clone)]
pub struct TransitionRecord {
    pub state: Vec<f64>,
    pub action_index: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Binary sum tree over leaf priorities, capacity padded to a power of two.
/// Nodes are 1-indexed; leaves occupy `[capacity, 2*capacity)`.
#[derive(Debug, Clone)]
pub struct SumTree {
    capacity: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(min_capacity: usize) -> Self {
        let capacity = min_capacity.max(1).next_power_of_two();
        SumTree {
            capacity,
            nodes: vec![0.0; 2 * capacity],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn leaf(&self, idx: usize) -> f64 {
        self.nodes[self.capacity + idx]
    }

    pub fn set(&mut self, idx: usize, value: f64) {
        debug_assert!(value >= 0.0);
        let mut node = self.capacity + idx;
        let delta = value - self.nodes[node];
        while node >= 1 {
            self.nodes[node] += delta;
            node /= 2;
        }
    }

    /// Descends from the root to the leaf containing cumulative `mass`.
    pub fn find(&self, mass: f64) -> usize {
        let mut node = 1;
        let mut m = mass;
        while node < self.capacity {
            let left = 2 * node;
            if m < self.nodes[left] {
                node = left;
            } else {
                m -= self.nodes[left];
                node = left + 1;
            }
        }
        node - self.capacity
    }

    /// Recomputes internal nodes from the leaves; used by consistency checks.
    pub fn leaf_sum(&self) -> f64 {
        self.nodes[self.capacity..].iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct SampledBatch {
    pub records: Vec<TransitionRecord>,
    pub weights: Vec<f64>,
    /// Monotone insertion ids; stale by the time priorities come back is fine.
    pub ids: Vec<u64>,
}

#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    alpha: f64,
    eps: f64,
    tree: SumTree,
    records: Vec<Option<TransitionRecord>>,
    /// Insertion id currently occupying each slot.
    slot_ids: Vec<u64>,
    next_id: u64,
    size: usize,
    /// Max raw priority ever seen; assigned to fresh pushes.
    max_priority: f64,
    stale_updates_skipped: u64,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, alpha: f64, eps: f64, seed: u64) -> Self {
        ReplayBuffer {
            capacity,
            alpha,
            eps,
            tree: SumTree::new(capacity),
            records: (0..capacity).map(|_| None).collect(),
            slot_ids: vec![u64::MAX; capacity],
            next_id: 0,
            size: 0,
            max_priority: 1.0,
            stale_updates_skipped: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn stale_updates_skipped(&self) -> u64 {
        self.stale_updates_skipped
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    /// Raw (pre-exponent) priority of an occupied slot.
    pub fn slot_priority(&self, slot: usize) -> f64 {
        self.tree.leaf(slot).powf(1.0 / self.alpha)
    }

    /// Stores with the running max priority (1 for an empty buffer);
    /// overwrites the oldest record once full.
    pub fn push(&mut self, record: TransitionRecord) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let slot = (id % self.capacity as u64) as usize;
        if self.records[slot].is_none() {
            self.size += 1;
        }
        self.records[slot] = Some(record);
        self.slot_ids[slot] = id;
        self.tree.set(slot, self.max_priority.powf(self.alpha));
        id
    }

    /// Stratified proportional sampling: one draw per equal-mass segment.
    /// Weights are `(N * P(i))^-beta`, normalized so the batch max is 1.
    pub fn sample(&mut self, batch: usize, beta: f64) -> Result<SampledBatch, ReplayError> {
        if self.size < batch {
            return Err(ReplayError::NotReady {
                have: self.size,
                need: batch,
            });
        }
        let total = self.tree.total();
        let segment = total / batch as f64;
        let mut records = Vec::with_capacity(batch);
        let mut ids = Vec::with_capacity(batch);
        let mut probs = Vec::with_capacity(batch);
        for k in 0..batch {
            let mass = (k as f64 + self.rng.gen::<f64>()) * segment;
            let mut slot = self.tree.find(mass.min(total * (1.0 - 1e-12)));
            // numeric edge: descent can land on an unoccupied zero leaf
            while self.records[slot].is_none() {
                slot = (slot + self.capacity - 1) % self.capacity;
            }
            records.push(self.records[slot].clone().expect("occupied"));
            ids.push(self.slot_ids[slot]);
            probs.push(self.tree.leaf(slot) / total);
        }
        let n = self.size as f64;
        let mut weights: Vec<f64> = probs.iter().map(|p| (n * p).powf(-beta)).collect();
        let max_w = weights.iter().cloned().fold(f64::MIN, f64::max);
        for w in &mut weights {
            *w /= max_w;
        }
        Ok(SampledBatch { records, weights, ids })
    }

    /// Sets `p = |td_error| + eps` for each sampled id. Ids whose slot has
    /// been overwritten since sampling are skipped and counted.
    pub fn update_priorities(&mut self, ids: &[u64], td_errors: &[f64]) {
        for (&id, &td) in ids.iter().zip(td_errors) {
            let slot = (id % self.capacity as u64) as usize;
            if self.slot_ids[slot] != id {
                self.stale_updates_skipped += 1;
                continue;
            }
            let p = td.abs() + self.eps;
            self.tree.set(slot, p.powf(self.alpha));
            if p > self.max_priority {
                self.max_priority = p;
            }
        }
    }
}
