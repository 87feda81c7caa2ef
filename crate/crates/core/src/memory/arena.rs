//! Byte accounting for the single budgeted arena.
//!
//! The arena is one logical address space split into three regions laid
//! out back to back: the maxId cells of every active slot (each slot gets
//! exactly `src` cells), the fillMark cells (`n` per slot) and the
//! frontier region (current and next queue, each a vertex/tracker pair per
//! entry). maxId and fillMark are sized first; whatever remains of the
//! budget goes to the frontier queues.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::graph::Vertex;

pub const MAXID_CELL_BYTES: usize = 8;
pub const FILL_CELL_BYTES: usize = 4;
/// One queue entry: 32-bit vertex plus 32-bit tracker.
pub const FRONTIER_ENTRY_BYTES: usize = 8;
/// Current and next frontier batches live side by side.
pub const FRONTIER_BATCHES: usize = 2;
pub const DEFAULT_FRONTIER_FLOOR: usize = 1024;

/// A slot's maxId slice, in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotExtent {
    pub offset: usize,
    pub len: usize,
}

impl SlotExtent {
    pub fn cells(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Prefix-sum layout: slot `i` gets exactly `sources[i]` cells.
pub fn maxid_offsets(sources: &[Vertex]) -> Vec<SlotExtent> {
    let mut offset = 0;
    sources
        .iter()
        .map(|&src| {
            let ext = SlotExtent {
                offset,
                len: src as usize,
            };
            offset += src as usize;
            ext
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub slots: Vec<SlotExtent>,
    pub maxid_cells: usize,
    pub fill_cells: usize,
    /// Entries per frontier batch.
    pub frontier_capacity: usize,
    pub maxid_region: Range<usize>,
    pub fill_region: Range<usize>,
    pub frontier_region: Range<usize>,
}

impl Layout {
    pub fn total_bytes(&self) -> usize {
        self.frontier_region.end
    }

    /// Cell count comparable with the untrimmed `6 * n * #C` footprint:
    /// maxId, fillMark, and queue + tracker for both batches.
    pub fn cells(&self) -> usize {
        self.maxid_cells + self.fill_cells + 2 * FRONTIER_BATCHES * self.frontier_capacity
    }

    pub fn concurrency(&self) -> usize {
        self.slots.len()
    }

    /// Regions are disjoint, contiguous, and fit the budget.
    pub fn validate(&self, budget: Option<usize>) -> Result<()> {
        let ordered = self.maxid_region.end <= self.fill_region.start
            && self.fill_region.end <= self.frontier_region.start;
        let sized = self.maxid_region.len() == self.maxid_cells * MAXID_CELL_BYTES
            && self.fill_region.len() == self.fill_cells * FILL_CELL_BYTES
            && self.frontier_region.len()
                == self.frontier_capacity * FRONTIER_ENTRY_BYTES * FRONTIER_BATCHES;
        let slots_ok = self
            .slots
            .windows(2)
            .all(|w| w[0].offset + w[0].len == w[1].offset)
            && self.slots.iter().map(|s| s.len).sum::<usize>() == self.maxid_cells;
        if !(ordered && sized && slots_ok) {
            return Err(Error::InvariantViolation(format!(
                "bad arena layout {self:?}"
            )));
        }
        if let Some(b) = budget {
            if self.total_bytes() > b {
                return Err(Error::InvariantViolation(format!(
                    "layout uses {} bytes over budget {b}",
                    self.total_bytes()
                )));
            }
        }
        Ok(())
    }
}

fn fixed_bytes(n: usize, sources: &[Vertex]) -> usize {
    let maxid: usize = sources.iter().map(|&s| s as usize).sum();
    maxid * MAXID_CELL_BYTES + sources.len() * n * FILL_CELL_BYTES
}

fn frontier_bytes(entries: usize) -> usize {
    entries * FRONTIER_ENTRY_BYTES * FRONTIER_BATCHES
}

/// A queue never needs more than `n` entries per slot to be useful; the
/// floor is clipped to that.
fn queue_limit(n: usize, slots: usize) -> usize {
    (n * slots).max(1)
}

/// Bytes needed to run `sources` together with at least `floor` queue entries.
pub fn required_bytes(n: usize, sources: &[Vertex], floor: usize) -> usize {
    fixed_bytes(n, sources) + frontier_bytes(floor.min(queue_limit(n, sources.len())))
}

#[derive(Debug)]
pub struct Arena {
    n: usize,
    budget: Option<usize>,
    frontier_floor: usize,
    layout: Option<Layout>,
    high_water: usize,
    checked: bool,
}

impl Arena {
    /// `budget = None` means unbounded.
    pub fn new(n: usize, budget: Option<usize>, frontier_floor: usize) -> Self {
        Arena {
            n,
            budget,
            frontier_floor: frontier_floor.max(1),
            layout: None,
            high_water: 0,
            checked: false,
        }
    }

    pub fn checked(mut self, on: bool) -> Self {
        self.checked = on;
        self
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn frontier_floor(&self) -> usize {
        self.frontier_floor
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    pub fn high_water_mark(&self) -> usize {
        self.high_water
    }

    /// Lay out a wave: maxId and fillMark first, the remainder to frontiers.
    pub fn repartition(&mut self, sources: &[Vertex]) -> Result<&Layout> {
        let n = self.n;
        let slots = maxid_offsets(sources);
        let maxid_cells: usize = slots.iter().map(|s| s.len).sum();
        let fill_cells = sources.len() * n;
        let fixed = fixed_bytes(n, sources);
        let limit = queue_limit(n, sources.len());
        let floor = self.frontier_floor.min(limit);

        let frontier_capacity = match self.budget {
            None => limit,
            Some(budget) => {
                let needed = fixed + frontier_bytes(floor);
                if needed > budget {
                    return Err(Error::ArenaExhausted { needed, budget });
                }
                ((budget - fixed) / frontier_bytes(1)).min(limit)
            }
        };

        let maxid_region = 0..maxid_cells * MAXID_CELL_BYTES;
        let fill_region = maxid_region.end..maxid_region.end + fill_cells * FILL_CELL_BYTES;
        let frontier_region = fill_region.end..fill_region.end + frontier_bytes(frontier_capacity);
        let layout = Layout {
            slots,
            maxid_cells,
            fill_cells,
            frontier_capacity,
            maxid_region,
            fill_region,
            frontier_region,
        };
        if self.checked {
            layout.validate(self.budget)?;
        }
        self.high_water = self.high_water.max(layout.total_bytes());
        Ok(self.layout.insert(layout))
    }
}

/// Largest `k <= requested` such that the first `k` of `upcoming` fit the
/// budget together with the frontier floor.
pub fn shrink_concurrency(
    requested: usize,
    budget: Option<usize>,
    n: usize,
    upcoming: &[Vertex],
    floor: usize,
) -> Result<usize> {
    let want = requested.min(upcoming.len()).max(1);
    let Some(budget) = budget else {
        return Ok(want);
    };
    let take = |k: usize| &upcoming[..k.min(upcoming.len())];
    for k in (1..=want).rev() {
        if required_bytes(n, take(k), floor.max(1)) <= budget {
            return Ok(k);
        }
    }
    Err(Error::ConfigurationInfeasible(format!(
        "budget of {budget} bytes cannot hold one source ({} bytes needed)",
        required_bytes(n, take(1), floor.max(1))
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimmed_offsets() {
        let ext = maxid_offsets(&[3, 8]);
        assert_eq!(
            ext,
            vec![
                SlotExtent { offset: 0, len: 3 },
                SlotExtent { offset: 3, len: 8 }
            ]
        );
        let total: usize = ext.iter().map(|e| e.len).sum();
        assert_eq!(total, 11);
        assert!(total < 2 * 10);
        assert!(maxid_offsets(&[0, 0, 0]).iter().all(|e| e.len == 0));
    }

    #[test]
    fn frontier_shrinks_as_sources_grow() {
        let n = 1000;
        let budget = 200_000;
        let mut last = usize::MAX;
        for base in [10u32, 200, 500, 900] {
            let mut a = Arena::new(n, Some(budget), 16);
            let cap = a
                .repartition(&[base, base + 1, base + 2])
                .unwrap()
                .frontier_capacity;
            assert!(cap <= last);
            last = cap;
        }
    }

    #[test]
    fn exact_budget_leaves_frontier_at_floor() {
        let n = 100;
        let sources = [40u32, 90];
        let floor = 32;
        let budget = required_bytes(n, &sources, floor);
        let mut a = Arena::new(n, Some(budget), floor).checked(true);
        let l = a.repartition(&sources).unwrap();
        assert_eq!(l.frontier_capacity, floor);
        assert_eq!(l.total_bytes(), budget);
        assert!(matches!(
            Arena::new(n, Some(budget - 1), floor).repartition(&sources),
            Err(Error::ArenaExhausted { .. })
        ));
    }

    #[test]
    fn shrink_rules() {
        let n = 64;
        let up = [60u32, 61, 62, 63];
        assert_eq!(shrink_concurrency(4, None, n, &up, 8).unwrap(), 4);
        assert_eq!(shrink_concurrency(4, Some(1 << 30), n, &up, 8).unwrap(), 4);
        let one = required_bytes(n, &up[..1], 8);
        assert_eq!(shrink_concurrency(4, Some(one), n, &up, 8).unwrap(), 1);
        assert!(matches!(
            shrink_concurrency(4, Some(one - 1), n, &up, 8),
            Err(Error::ConfigurationInfeasible(_))
        ));
    }

    #[test]
    fn unbounded_layout_respects_untrimmed_footprint() {
        let n = 50;
        let mut a = Arena::new(n, None, DEFAULT_FRONTIER_FLOOR);
        let l = a.repartition(&[49, 10, 0]).unwrap();
        assert!(l.cells() <= 6 * n * 3);
        l.validate(None).unwrap();
    }
}
