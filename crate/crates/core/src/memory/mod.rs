//! Budgeted arena layout, frontier queues and the spill store.

pub mod arena;
pub mod frontier;
pub mod spill;

pub use arena::{maxid_offsets, shrink_concurrency, Arena, Layout, SlotExtent};
pub use frontier::FrontierBatch;
pub use spill::{FrontierEntry, SpillBackend, SpillStore};
