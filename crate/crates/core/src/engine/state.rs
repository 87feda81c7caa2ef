//! Per-slot traversal state shared by all workers of one engine.
//!
//! maxId cells are 64-bit and epoch encoded: a slot assigned base `B`
//! stores logical value `m` as `B - n + m`, and any raw value `>= B` reads
//! as +∞. Every new assignment takes a base `n` below the previous one, so
//! whatever an earlier source left behind decodes as +∞ without touching
//! memory. When the bases run out the cells are rewritten to the sentinel
//! once and the bases start over.
//!
//! fillMark cells hold the stamp of the assignment that put the vertex in
//! the row; stamps only grow, so a stale stamp never matches.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, Vertex};
use crate::memory::{FrontierBatch, Layout, SlotExtent};
use crate::structure::RowStructure;

/// Decoded +∞.
pub const INFINITE: u32 = u32::MAX;

/// Whether the fillMark check runs before the maxId update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccessOrder {
    #[default]
    MaxIdFirst,
    FillFirst,
}

/// Hands out decreasing encoding bases.
#[derive(Clone, Debug)]
pub struct EpochClock {
    width: u64,
    max_encoded: u64,
    next_base: u64,
    reinits: u64,
    assignments: u64,
}

impl EpochClock {
    pub fn new(n: usize, max_encoded: u64) -> Result<Self> {
        let width = (n as u64).max(1);
        if max_encoded < width {
            return Err(Error::InvalidConfig(format!(
                "maxId value range {max_encoded} is smaller than n = {n}"
            )));
        }
        Ok(EpochClock {
            width,
            max_encoded,
            next_base: max_encoded,
            reinits: 0,
            assignments: 0,
        })
    }

    pub fn sentinel(&self) -> u64 {
        self.max_encoded
    }

    /// Bases left before a physical rewrite is needed.
    pub fn remaining(&self) -> u64 {
        self.next_base / self.width
    }

    /// Epochs one physical initialization provides.
    pub fn epochs_per_fill(&self) -> u64 {
        self.max_encoded / self.width
    }

    pub fn reinits(&self) -> u64 {
        self.reinits
    }

    pub fn assignments(&self) -> u64 {
        self.assignments
    }

    fn reset(&mut self) {
        self.next_base = self.max_encoded;
        self.reinits += 1;
    }

    fn advance(&mut self) -> u64 {
        debug_assert!(self.remaining() >= 1);
        let base = self.next_base;
        self.next_base -= self.width;
        self.assignments += 1;
        base
    }

    #[inline]
    pub fn encode(&self, base: u64, value: u32) -> u64 {
        base - self.width + value as u64
    }

    #[inline]
    pub fn decode(&self, base: u64, raw: u64) -> u32 {
        if raw >= base {
            INFINITE
        } else {
            (raw - (base - self.width)) as u32
        }
    }
}

/// What one relaxation did.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RelaxOutcome {
    pub updated: bool,
    pub new_fill: bool,
    pub enqueue: bool,
    /// The update lowered a value that was already finite.
    pub revisit: bool,
}

/// One successful maxId write, logged in checked mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpdateRecord {
    pub assignment: u32,
    pub vertex: Vertex,
    pub old: u32,
    pub new: u32,
}

#[derive(Debug)]
struct Slot {
    src: Vertex,
    extent: SlotExtent,
    base: u64,
    stamp: u32,
    active: bool,
    lower: Mutex<Vec<Vertex>>,
    upper: Mutex<Vec<Vertex>>,
    frontier_insertions: AtomicU64,
}

impl Slot {
    fn idle() -> Self {
        Slot {
            src: 0,
            extent: SlotExtent { offset: 0, len: 0 },
            base: 0,
            stamp: 0,
            active: false,
            lower: Mutex::new(Vec::new()),
            upper: Mutex::new(Vec::new()),
            frontier_insertions: AtomicU64::new(0),
        }
    }
}

#[derive(Debug)]
pub struct TraversalState {
    n: usize,
    clock: EpochClock,
    max_id: Vec<AtomicU64>,
    fill_mark: Vec<AtomicU32>,
    slots: Vec<Slot>,
    next_stamp: u32,
    checked: bool,
    log: Mutex<Vec<UpdateRecord>>,
}

impl TraversalState {
    pub fn new(n: usize, max_encoded: u64, checked: bool) -> Result<Self> {
        Ok(TraversalState {
            n,
            clock: EpochClock::new(n, max_encoded)?,
            max_id: Vec::new(),
            fill_mark: Vec::new(),
            slots: Vec::new(),
            next_stamp: 1,
            checked,
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clock(&self) -> &EpochClock {
        &self.clock
    }

    pub fn reinit_count(&self) -> u64 {
        self.clock.reinits()
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn src(&self, slot: usize) -> Vertex {
        self.slots[slot].src
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.slots.get(slot).is_some_and(|s| s.active)
    }

    /// Adopt a wave's layout: size the cell arrays, place each slot's maxId
    /// slice, and rewrite the cells if the clock cannot cover the wave.
    pub fn begin_wave(&mut self, layout: &Layout) -> Result<()> {
        let sentinel = self.clock.sentinel();
        let k = layout.concurrency();
        if self.max_id.len() < layout.maxid_cells {
            self.max_id
                .resize_with(layout.maxid_cells, || AtomicU64::new(sentinel));
        }
        if self.fill_mark.len() < k * self.n {
            self.fill_mark.resize_with(k * self.n, || AtomicU32::new(0));
        }
        if self.clock.remaining() < k as u64 {
            self.reinitialize();
        }
        if self.slots.len() < k {
            self.slots.resize_with(k, Slot::idle);
        }
        for (slot, ext) in self.slots.iter_mut().zip(
            layout
                .slots
                .iter()
                .copied()
                .map(Some)
                .chain(std::iter::repeat(None)),
        ) {
            slot.active = false;
            slot.extent = ext.unwrap_or(SlotExtent { offset: 0, len: 0 });
        }
        Ok(())
    }

    fn reinitialize(&mut self) {
        let sentinel = self.clock.sentinel();
        for c in &mut self.max_id {
            *c.get_mut() = sentinel;
        }
        self.clock.reset();
    }

    /// Take a fresh encoding base for `slot`.
    pub fn epoch_advance(&mut self, slot: usize) -> u64 {
        if self.clock.remaining() == 0 {
            self.reinitialize();
        }
        let base = self.clock.advance();
        self.slots[slot].base = base;
        base
    }

    /// Bind `src` to `slot`, record its direct neighbors, and queue the
    /// ones below `src`.
    pub fn init_source(
        &mut self,
        g: &CsrGraph,
        slot: usize,
        src: Vertex,
        batch: &mut FrontierBatch,
    ) -> Result<()> {
        if slot >= self.slots.len() || self.slots[slot].extent.len != src as usize {
            return Err(Error::ArenaExhausted {
                needed: src as usize * crate::memory::arena::MAXID_CELL_BYTES,
                budget: self
                    .slots
                    .get(slot)
                    .map_or(0, |s| s.extent.len * crate::memory::arena::MAXID_CELL_BYTES),
            });
        }
        if self.slots[slot].active {
            return Err(Error::InvariantViolation(format!(
                "slot {slot} already occupied"
            )));
        }
        if self.next_stamp == u32::MAX {
            for c in &mut self.fill_mark {
                *c.get_mut() = 0;
            }
            self.next_stamp = 1;
        }
        let stamp = self.next_stamp;
        self.next_stamp += 1;
        self.epoch_advance(slot);
        {
            let s = &mut self.slots[slot];
            s.src = src;
            s.stamp = stamp;
            s.active = true;
            s.lower.get_mut().unwrap().clear();
            s.upper.get_mut().unwrap().clear();
            *s.frontier_insertions.get_mut() = 0;
        }

        let src_us = src as usize;
        for &w in g.neighbors(src_us) {
            let prev = self.fill_cell(slot, w).swap(stamp, Ordering::AcqRel);
            if prev == stamp {
                continue;
            }
            if (w as usize) < src_us {
                self.slots[slot].lower.get_mut().unwrap().push(w);
                self.update_max_id(slot, w, 0)?;
                batch.push(w, slot as u32)?;
                *self.slots[slot].frontier_insertions.get_mut() += 1;
            } else {
                self.slots[slot].upper.get_mut().unwrap().push(w);
            }
        }
        Ok(())
    }

    #[inline]
    fn fill_cell(&self, slot: usize, v: Vertex) -> &AtomicU32 {
        &self.fill_mark[slot * self.n + v as usize]
    }

    #[inline]
    fn max_cell(&self, slot: usize, v: Vertex) -> Result<&AtomicU64> {
        let ext = self.slots[slot].extent;
        if self.checked && v as usize >= ext.len {
            return Err(Error::InvariantViolation(format!(
                "slot {slot} touched maxId({v}) outside its {} cells",
                ext.len
            )));
        }
        Ok(&self.max_id[ext.offset + v as usize])
    }

    /// Decoded maxId of `v` in `slot`; `None` is +∞.
    pub fn max_id(&self, slot: usize, v: Vertex) -> Option<u32> {
        let s = &self.slots[slot];
        if v >= s.src {
            return None;
        }
        let raw = self.max_id[s.extent.offset + v as usize].load(Ordering::Acquire);
        match self.clock.decode(s.base, raw) {
            INFINITE => None,
            m => Some(m),
        }
    }

    pub fn is_stamped(&self, slot: usize, v: Vertex) -> bool {
        self.fill_cell(slot, v).load(Ordering::Acquire) == self.slots[slot].stamp
    }

    /// Linearizable `maxId(v) = min(maxId(v), value)`. Returns the decoded
    /// previous value when the cell strictly decreased.
    pub fn update_max_id(&self, slot: usize, v: Vertex, value: u32) -> Result<Option<u32>> {
        let s = &self.slots[slot];
        let raw = self.clock.encode(s.base, value);
        let prev = self.max_cell(slot, v)?.fetch_min(raw, Ordering::AcqRel);
        if raw < prev {
            let old = self.clock.decode(s.base, prev);
            if self.checked {
                self.log.lock().unwrap().push(UpdateRecord {
                    assignment: s.stamp,
                    vertex: v,
                    old,
                    new: value,
                });
            }
            Ok(Some(old))
        } else {
            Ok(None)
        }
    }

    /// maxId-before-fill relaxation of `frontier -> neighbor` for `slot`,
    /// with `path_max = max(maxId(frontier), frontier)` already computed.
    pub fn relax_neighbor(
        &self,
        slot: usize,
        path_max: u32,
        neighbor: Vertex,
    ) -> Result<RelaxOutcome> {
        let s = &self.slots[slot];
        let mut out = RelaxOutcome::default();
        if neighbor == s.src {
            return Ok(out);
        }
        if neighbor > s.src {
            if self
                .fill_cell(slot, neighbor)
                .swap(s.stamp, Ordering::AcqRel)
                != s.stamp
            {
                s.upper.lock().unwrap().push(neighbor);
                out.new_fill = true;
            }
            return Ok(out);
        }
        let Some(old) = self.update_max_id(slot, neighbor, path_max)? else {
            return Ok(out);
        };
        out.updated = true;
        out.revisit = old != INFINITE;
        if path_max < neighbor {
            if self
                .fill_cell(slot, neighbor)
                .swap(s.stamp, Ordering::AcqRel)
                != s.stamp
            {
                s.lower.lock().unwrap().push(neighbor);
                out.new_fill = true;
                out.enqueue = true;
            }
        } else if self.fill_cell(slot, neighbor).load(Ordering::Acquire) != s.stamp {
            out.enqueue = true;
        }
        Ok(out)
    }

    /// Same contract, but a neighbor below the source that is already in
    /// the row is skipped before its maxId is touched.
    pub fn relax_neighbor_fill_first(
        &self,
        slot: usize,
        path_max: u32,
        neighbor: Vertex,
    ) -> Result<RelaxOutcome> {
        let s = &self.slots[slot];
        if neighbor < s.src && self.fill_cell(slot, neighbor).load(Ordering::Acquire) == s.stamp {
            return Ok(RelaxOutcome::default());
        }
        self.relax_neighbor(slot, path_max, neighbor)
    }

    #[inline]
    pub fn relax(
        &self,
        order: AccessOrder,
        slot: usize,
        path_max: u32,
        neighbor: Vertex,
    ) -> Result<RelaxOutcome> {
        match order {
            AccessOrder::MaxIdFirst => self.relax_neighbor(slot, path_max, neighbor),
            AccessOrder::FillFirst => self.relax_neighbor_fill_first(slot, path_max, neighbor),
        }
    }

    /// `max(maxId(frontier), frontier)` for a queued frontier.
    #[inline]
    pub fn path_max(&self, slot: usize, frontier: Vertex) -> u32 {
        // a queued frontier always has a finite maxId
        self.max_id(slot, frontier).unwrap_or(0).max(frontier)
    }

    pub(crate) fn count_insertion(&self, slot: usize) {
        self.slots[slot]
            .frontier_insertions
            .fetch_add(1, Ordering::Relaxed);
    }

    pub fn frontier_insertions(&self, slot: usize) -> u64 {
        self.slots[slot].frontier_insertions.load(Ordering::Relaxed)
    }

    /// Snapshot of the row discovered so far, unsorted.
    pub fn row_snapshot(&self, slot: usize) -> RowStructure {
        let s = &self.slots[slot];
        RowStructure {
            row: s.src as usize,
            lower: s.lower.lock().unwrap().clone(),
            upper: s.upper.lock().unwrap().clone(),
        }
    }

    /// Release `slot` and hand back its sorted row.
    pub fn finish_slot(&mut self, slot: usize) -> RowStructure {
        let s = &mut self.slots[slot];
        s.active = false;
        RowStructure {
            row: s.src as usize,
            lower: std::mem::take(s.lower.get_mut().unwrap()),
            upper: std::mem::take(s.upper.get_mut().unwrap()),
        }
        .sorted()
    }

    pub fn take_update_log(&mut self) -> Vec<UpdateRecord> {
        std::mem::take(self.log.get_mut().unwrap())
    }
}

/// Check that, per assignment and vertex, the logged writes form one
/// strictly decreasing chain starting at +∞. Returns the violation count.
pub fn audit_monotonicity(log: &mut [UpdateRecord]) -> usize {
    log.sort_unstable_by(|a, b| {
        (a.assignment, a.vertex, std::cmp::Reverse(a.old)).cmp(&(
            b.assignment,
            b.vertex,
            std::cmp::Reverse(b.old),
        ))
    });
    let mut violations = 0;
    for (k, r) in log.iter().enumerate() {
        if r.new >= r.old {
            violations += 1;
        }
        let first =
            k == 0 || (log[k - 1].assignment, log[k - 1].vertex) != (r.assignment, r.vertex);
        let expected_old = if first { INFINITE } else { log[k - 1].new };
        if r.old != expected_old {
            violations += 1;
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig7_graph;
    use crate::memory::Arena;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state_for(g: &CsrGraph, src: Vertex, checked: bool) -> (TraversalState, FrontierBatch) {
        let mut arena = Arena::new(g.n(), None, 16);
        let layout = arena.repartition(&[src]).unwrap().clone();
        let mut st = TraversalState::new(g.n(), u64::MAX, checked).unwrap();
        st.begin_wave(&layout).unwrap();
        let mut batch = FrontierBatch::unbounded();
        st.init_source(g, 0, src, &mut batch).unwrap();
        (st, batch)
    }

    #[test]
    fn init_source_8_queues_smaller_neighbors() {
        let g = fig7_graph();
        let (st, mut batch) = state_for(&g, 8, true);
        let queued: Vec<_> = batch.entries().unwrap().into_iter().map(|e| e.0).collect();
        assert_eq!(queued, vec![1, 2, 7]);
        for v in [1, 2, 7] {
            assert_eq!(st.max_id(0, v), Some(0));
        }
        for v in [0, 3, 4, 5, 6] {
            assert_eq!(st.max_id(0, v), None);
        }
        let row = st.row_snapshot(0);
        assert_eq!(row.upper, vec![9]);
        assert!(st.is_stamped(0, 9));
    }

    #[test]
    fn init_source_zero_and_isolated() {
        let g = fig7_graph();
        let (st, batch) = state_for(&g, 0, false);
        assert!(batch.is_empty());
        assert_eq!(st.row_snapshot(0).upper, vec![5]);
        let (st, batch) = state_for(&g, 9, false);
        assert!(batch.is_empty());
        let row = st.row_snapshot(0);
        assert!(row.lower.is_empty() && row.upper.is_empty());
    }

    #[test]
    fn relaxation_cases_from_source_8() {
        let g = fig7_graph();
        let (st, _) = state_for(&g, 8, true);
        // 2 -> 3: ∞ → 2, fill, enqueue
        let o = st.relax_neighbor(0, st.path_max(0, 2), 3).unwrap();
        assert_eq!((o.updated, o.new_fill, o.enqueue), (true, true, true));
        assert_eq!(st.max_id(0, 3), Some(2));
        // 7 -> 4: ∞ → 7, no fill, enqueue
        let o = st.relax_neighbor(0, st.path_max(0, 7), 4).unwrap();
        assert_eq!((o.updated, o.new_fill, o.enqueue), (true, false, true));
        assert_eq!(st.max_id(0, 4), Some(7));
        // 2 -> 5 then 5 -> 3: max(2, 5) = 5 > 2, nothing
        st.relax_neighbor(0, st.path_max(0, 2), 5).unwrap();
        let o = st.relax_neighbor(0, st.path_max(0, 5), 3).unwrap();
        assert_eq!(o, RelaxOutcome::default());
        // 1 -> 0 gives maxId(0) = 1; 0 -> 5 lowers 2 → 1 but 5 is already in the row
        st.relax_neighbor(0, st.path_max(0, 1), 0).unwrap();
        assert_eq!(st.path_max(0, 0), 1);
        let o = st.relax_neighbor(0, st.path_max(0, 0), 5).unwrap();
        assert_eq!((o.updated, o.new_fill, o.enqueue), (true, false, false));
        assert_eq!(st.max_id(0, 5), Some(1));
    }

    #[test]
    fn fill_first_skips_write_on_stamped_neighbor() {
        let g = fig7_graph();
        let (st, _) = state_for(&g, 8, false);
        st.relax_neighbor(0, st.path_max(0, 2), 5).unwrap();
        st.relax_neighbor(0, st.path_max(0, 1), 0).unwrap();
        let o = st
            .relax_neighbor_fill_first(0, st.path_max(0, 0), 5)
            .unwrap();
        assert_eq!(o, RelaxOutcome::default());
        assert_eq!(st.max_id(0, 5), Some(2));
        // an unstamped neighbor behaves exactly as the default order
        let o = st
            .relax_neighbor_fill_first(0, st.path_max(0, 7), 4)
            .unwrap();
        assert_eq!((o.updated, o.new_fill, o.enqueue), (true, false, true));
    }

    #[test]
    fn upper_neighbors_recorded_once_never_queued() {
        let g = CsrGraph::from_entries(4, [(1, 0), (0, 3)]).unwrap();
        let (st, _) = state_for(&g, 1, false);
        let o = st.relax_neighbor(0, st.path_max(0, 0), 3).unwrap();
        assert_eq!((o.updated, o.new_fill, o.enqueue), (false, true, false));
        let o = st.relax_neighbor(0, st.path_max(0, 0), 3).unwrap();
        assert_eq!(o, RelaxOutcome::default());
    }

    #[test]
    fn first_reuse_reads_stale_values_as_infinite() {
        let n = 10;
        let mut arena = Arena::new(n, None, 4);
        let layout = arena.repartition(&[9]).unwrap().clone();
        let g = CsrGraph::empty(n);
        let mut st = TraversalState::new(n, 1 << 20, false).unwrap();
        st.begin_wave(&layout).unwrap();
        let mut b = FrontierBatch::unbounded();
        st.init_source(&g, 0, 9, &mut b).unwrap();
        st.update_max_id(0, 3, 4).unwrap();
        assert_eq!(st.max_id(0, 3), Some(4));
        st.finish_slot(0);
        st.begin_wave(&layout).unwrap();
        st.init_source(&g, 0, 9, &mut b).unwrap();
        assert_eq!(st.max_id(0, 3), None);
        assert_eq!(st.reinit_count(), 0);
    }

    #[test]
    fn reinit_after_range_exhausted() {
        let n = 10;
        let epochs = 4;
        let mut arena = Arena::new(n, None, 4);
        let layout = arena.repartition(&[5]).unwrap().clone();
        let g = CsrGraph::empty(n);
        let mut st = TraversalState::new(n, epochs * n as u64, false).unwrap();
        let mut b = FrontierBatch::unbounded();
        for uses in 1..=9u64 {
            st.begin_wave(&layout).unwrap();
            st.init_source(&g, 0, 5, &mut b).unwrap();
            st.finish_slot(0);
            assert_eq!(st.reinit_count(), (uses - 1) / epochs);
        }
    }

    #[test]
    fn tiny_value_range_rejected() {
        assert!(matches!(
            TraversalState::new(100, 50, false),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn checked_mode_catches_out_of_slice_access() {
        let g = fig7_graph();
        let (st, _) = state_for(&g, 3, true);
        assert!(matches!(
            st.update_max_id(0, 3, 0),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn audit_flags_broken_chain() {
        let mut ok = vec![
            UpdateRecord {
                assignment: 1,
                vertex: 3,
                old: INFINITE,
                new: 7,
            },
            UpdateRecord {
                assignment: 1,
                vertex: 3,
                old: 7,
                new: 2,
            },
            UpdateRecord {
                assignment: 2,
                vertex: 3,
                old: INFINITE,
                new: 9,
            },
        ];
        assert_eq!(audit_monotonicity(&mut ok), 0);
        let mut bad = vec![
            UpdateRecord {
                assignment: 1,
                vertex: 3,
                old: INFINITE,
                new: 2,
            },
            UpdateRecord {
                assignment: 1,
                vertex: 3,
                old: 5,
                new: 6,
            },
        ];
        assert!(audit_monotonicity(&mut bad) > 0);
    }

    #[test]
    fn random_writes_match_shadow_across_reuses() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = CsrGraph::empty(n);
        let mut st = TraversalState::new(n, 8 * n as u64, true).unwrap();
        let mut arena = Arena::new(n, None, 4);
        let mut b = FrontierBatch::unbounded();
        for _ in 0..200 {
            let src = rng.gen_range(0..n as u32);
            let layout = arena.repartition(&[src]).unwrap().clone();
            st.begin_wave(&layout).unwrap();
            st.init_source(&g, 0, src, &mut b).unwrap();
            let mut shadow = vec![INFINITE; src as usize];
            for _ in 0..20 {
                if src == 0 {
                    break;
                }
                let v = rng.gen_range(0..src);
                let val = rng.gen_range(0..n as u32);
                st.update_max_id(0, v, val).unwrap();
                shadow[v as usize] = shadow[v as usize].min(val);
            }
            for v in 0..src {
                assert_eq!(st.max_id(0, v).unwrap_or(INFINITE), shadow[v as usize]);
            }
            st.finish_slot(0);
        }
        assert!(st.reinit_count() > 0);
        assert_eq!(audit_monotonicity(&mut st.take_update_log()), 0);
    }
}
