//! Combined frontier queue with a parallel tracker of source-slot indices.

use crate::error::Result;
use crate::graph::Vertex;
use crate::memory::spill::{FrontierEntry, SpillBackend, SpillStore};

/// Resident `queue`/`tracker` pair bounded by `capacity`, backed by a
/// [`SpillStore`] for whatever does not fit.
#[derive(Debug)]
pub struct FrontierBatch {
    queue: Vec<Vertex>,
    tracker: Vec<u32>,
    capacity: usize,
    spill: SpillStore,
}

impl FrontierBatch {
    pub fn new(capacity: usize, backend: &SpillBackend, audit: bool) -> Result<Self> {
        Ok(Self::with_store(capacity, SpillStore::new(backend, audit)?))
    }

    pub fn with_store(capacity: usize, spill: SpillStore) -> Self {
        FrontierBatch {
            queue: Vec::new(),
            tracker: Vec::new(),
            capacity: capacity.max(1),
            spill,
        }
    }

    /// Unbounded in-memory batch; handy in tests.
    pub fn unbounded() -> Self {
        Self::with_store(usize::MAX, SpillStore::in_memory())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn resident_len(&self) -> usize {
        self.queue.len()
    }

    pub fn spilled_len(&self) -> usize {
        self.spill.len()
    }

    /// Resident plus spilled entries.
    pub fn len(&self) -> usize {
        self.queue.len() + self.spill.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resident(&self) -> impl Iterator<Item = FrontierEntry> + '_ {
        self.queue.iter().copied().zip(self.tracker.iter().copied())
    }

    pub fn spill_store(&self) -> &SpillStore {
        &self.spill
    }

    pub fn into_spill_store(self) -> SpillStore {
        self.spill
    }

    /// Every entry, resident first then spilled in FIFO order.
    pub fn entries(&mut self) -> Result<Vec<FrontierEntry>> {
        let mut all: Vec<_> = self.resident().collect();
        all.extend(self.spill.peek_all()?);
        Ok(all)
    }

    /// Append one entry, draining the full resident queue to the spill
    /// store first when there is no room.
    pub fn push(&mut self, vertex: Vertex, slot: u32) -> Result<()> {
        if self.queue.len() >= self.capacity {
            self.spill_frontiers()?;
        }
        self.queue.push(vertex);
        self.tracker.push(slot);
        Ok(())
    }

    /// Move every resident entry, oldest first, to the spill store.
    pub fn spill_frontiers(&mut self) -> Result<()> {
        let queue = std::mem::take(&mut self.queue);
        let tracker = std::mem::take(&mut self.tracker);
        self.spill.spill(queue.into_iter().zip(tracker))
    }

    /// Stream spilled entries back in FIFO order until the resident queue
    /// is full. Returns how many were loaded.
    pub fn reload_frontiers(&mut self) -> Result<usize> {
        let room = self.capacity.saturating_sub(self.queue.len());
        let mut loaded = Vec::new();
        let k = self.spill.reload(room, &mut loaded)?;
        for (v, s) in loaded {
            self.queue.push(v);
            self.tracker.push(s);
        }
        Ok(k)
    }

    /// Hand over the resident entries, leaving the resident queue empty.
    pub fn take_resident(&mut self) -> Vec<FrontierEntry> {
        let queue = std::mem::take(&mut self.queue);
        let tracker = std::mem::take(&mut self.tracker);
        queue.into_iter().zip(tracker).collect()
    }

    /// Change the resident bound, spilling overflow if it shrinks.
    pub fn set_capacity(&mut self, capacity: usize) -> Result<()> {
        self.capacity = capacity.max(1);
        if self.queue.len() > self.capacity {
            self.spill_frontiers()?;
            self.reload_frontiers()?;
        }
        Ok(())
    }
}
