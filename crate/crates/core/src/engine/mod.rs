//! Fine-grained multi-source symbolic factorization.
//!
//! All frontiers of all active sources share one combined queue; a tracker
//! entry names the source slot of each frontier. Every frontier's
//! neighbors are relaxed in parallel against the slot's maxId array
//! (minimum over discovered paths of the largest intermediate vertex).
//! A neighbor is revisited whenever its maxId drops while it is not yet in
//! the row, so no parallel processing order can hide a fill.

pub mod state;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, Vertex};
use crate::memory::arena::DEFAULT_FRONTIER_FLOOR;
use crate::memory::{shrink_concurrency, Arena, FrontierBatch, FrontierEntry, SpillBackend};
use crate::structure::{FillStructure, RowStructure};

pub use state::{
    audit_monotonicity, AccessOrder, EpochClock, RelaxOutcome, TraversalState, UpdateRecord,
};

/// Entries a worker buffers before appending to the shared next batch.
const FLUSH_AT: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// Sources traversed together (`#C`).
    pub concurrent_sources: usize,
    /// Worker threads relaxing one batch.
    pub threads: usize,
    pub access_order: AccessOrder,
    /// Log and audit maxId writes, check arena layouts and slice bounds.
    pub checked: bool,
    /// `None` is unbounded.
    pub budget_bytes: Option<usize>,
    pub frontier_floor: usize,
    pub spill: SpillBackend,
    /// Top of the encoded maxId value range.
    pub max_encoded: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            concurrent_sources: 64,
            threads: 1,
            access_order: AccessOrder::MaxIdFirst,
            checked: false,
            budget_bytes: None,
            frontier_floor: DEFAULT_FRONTIER_FLOOR,
            spill: SpillBackend::Memory,
            max_encoded: u64::MAX,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineStats {
    pub traversed_edges: u64,
    pub iterations: u64,
    pub maxid_updates: u64,
    pub re_relaxations: u64,
    pub fills: u64,
    pub frontier_insertions: u64,
    pub spill_events: u64,
    pub spilled_entries: u64,
    pub reloaded_entries: u64,
    pub high_water_mark: usize,
    pub effective_concurrency: usize,
    pub waves: u64,
    pub epoch_reinits: u64,
    pub monotonicity_violations: u64,
    /// `(source, frontier entries queued for it)`.
    pub per_source_frontier: Vec<(Vertex, u64)>,
}

impl EngineStats {
    pub fn merge(&mut self, other: &EngineStats) {
        self.traversed_edges += other.traversed_edges;
        self.iterations += other.iterations;
        self.maxid_updates += other.maxid_updates;
        self.re_relaxations += other.re_relaxations;
        self.fills += other.fills;
        self.frontier_insertions += other.frontier_insertions;
        self.spill_events += other.spill_events;
        self.spilled_entries += other.spilled_entries;
        self.reloaded_entries += other.reloaded_entries;
        self.high_water_mark = self.high_water_mark.max(other.high_water_mark);
        self.effective_concurrency = match (self.effective_concurrency, other.effective_concurrency)
        {
            (0, c) | (c, 0) => c,
            (a, b) => a.min(b),
        };
        self.waves += other.waves;
        self.epoch_reinits += other.epoch_reinits;
        self.monotonicity_violations += other.monotonicity_violations;
        self.per_source_frontier
            .extend_from_slice(&other.per_source_frontier);
    }
}

/// Rows for the requested sources plus run statistics.
#[derive(Debug)]
pub struct RunOutput {
    pub rows: Vec<RowStructure>,
    pub stats: EngineStats,
}

impl RunOutput {
    pub fn into_structure(self, n: usize) -> FillStructure {
        FillStructure::from_rows(n, self.rows)
    }
}

#[derive(Default)]
struct BatchCounters {
    edges: AtomicU64,
    updates: AtomicU64,
    revisits: AtomicU64,
    fills: AtomicU64,
    enqueued: AtomicU64,
}

#[derive(Default)]
struct Local {
    buf: Vec<FrontierEntry>,
    edges: u64,
    updates: u64,
    revisits: u64,
    fills: u64,
}

/// Per-batch counters returned by [`Engine::process_batch`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BatchStats {
    pub traversed_edges: u64,
    pub maxid_updates: u64,
    pub re_relaxations: u64,
    pub fills: u64,
    pub enqueued: u64,
    pub spill_events: u64,
    pub spilled_entries: u64,
    pub reloaded_entries: u64,
}

pub struct Engine {
    config: EngineConfig,
    pool: rayon::ThreadPool,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        if config.concurrent_sources == 0 || config.threads == 0 {
            return Err(Error::InvalidConfig(
                "concurrent sources and threads must be at least 1".into(),
            ));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Engine { config, pool })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Relax every entry of `batch` (resident first, then spilled entries
    /// reloaded in FIFO order) and return the next batch. `batch` is empty
    /// afterwards.
    pub fn process_batch(
        &self,
        g: &CsrGraph,
        state: &TraversalState,
        batch: &mut FrontierBatch,
    ) -> Result<(FrontierBatch, BatchStats)> {
        let next = Mutex::new(FrontierBatch::new(
            batch.capacity(),
            &self.config.spill,
            self.config.checked,
        )?);
        let counters = BatchCounters::default();
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        let order = self.config.access_order;
        let reloaded_before = batch.spill_store().reloaded_total();

        let flush = |buf: &mut Vec<FrontierEntry>| {
            if buf.is_empty() {
                return;
            }
            let mut nb = next.lock().unwrap();
            for &(v, slot) in buf.iter() {
                if let Err(e) = nb.push(v, slot) {
                    failure.lock().unwrap().get_or_insert(e);
                    break;
                }
                state.count_insertion(slot as usize);
            }
            counters
                .enqueued
                .fetch_add(buf.len() as u64, Ordering::Relaxed);
            buf.clear();
        };

        loop {
            let resident = batch.take_resident();
            if resident.is_empty() {
                if batch.reload_frontiers()? == 0 {
                    break;
                }
                continue;
            }
            self.pool.install(|| {
                resident
                    .par_iter()
                    .fold(Local::default, |mut local, &(frontier, slot)| {
                        let slot = slot as usize;
                        let path_max = state.path_max(slot, frontier);
                        for &nb in g.neighbors(frontier as usize) {
                            local.edges += 1;
                            match state.relax(order, slot, path_max, nb) {
                                Ok(o) => {
                                    local.updates += o.updated as u64;
                                    local.revisits += o.revisit as u64;
                                    local.fills += o.new_fill as u64;
                                    if o.enqueue {
                                        local.buf.push((nb, slot as u32));
                                    }
                                }
                                Err(e) => {
                                    failure.lock().unwrap().get_or_insert(e);
                                }
                            }
                        }
                        if local.buf.len() >= FLUSH_AT {
                            flush(&mut local.buf);
                        }
                        local
                    })
                    .for_each(|mut local| {
                        flush(&mut local.buf);
                        counters.edges.fetch_add(local.edges, Ordering::Relaxed);
                        counters.updates.fetch_add(local.updates, Ordering::Relaxed);
                        counters
                            .revisits
                            .fetch_add(local.revisits, Ordering::Relaxed);
                        counters.fills.fetch_add(local.fills, Ordering::Relaxed);
                    });
            });
            if let Some(e) = failure.lock().unwrap().take() {
                return Err(e);
            }
        }

        let next = next.into_inner().unwrap();
        let stats = BatchStats {
            traversed_edges: counters.edges.into_inner(),
            maxid_updates: counters.updates.into_inner(),
            re_relaxations: counters.revisits.into_inner(),
            fills: counters.fills.into_inner(),
            enqueued: counters.enqueued.into_inner(),
            spill_events: next.spill_store().spill_events(),
            spilled_entries: next.spill_store().spilled_total(),
            reloaded_entries: batch.spill_store().reloaded_total() - reloaded_before,
        };
        Ok((next, stats))
    }

    /// Run `sources` in waves of up to `#C` slots (fewer when the budget
    /// demands it). Each wave iterates [`Engine::process_batch`] until no
    /// frontier remains, then the slots take the next sources.
    pub fn run_multi_source(&self, g: &CsrGraph, sources: &[Vertex]) -> Result<RunOutput> {
        let n = g.n();
        if let Some(&bad) = sources.iter().find(|&&s| s as usize >= n) {
            return Err(Error::Range {
                row: bad as usize,
                col: bad as usize,
                nrows: n,
                ncols: n,
            });
        }
        let cfg = &self.config;
        let mut arena = Arena::new(n, cfg.budget_bytes, cfg.frontier_floor).checked(cfg.checked);
        let mut state = TraversalState::new(n, cfg.max_encoded, cfg.checked)?;
        let mut stats = EngineStats::default();
        let mut rows = Vec::with_capacity(sources.len());

        let mut pos = 0;
        while pos < sources.len() {
            let k = shrink_concurrency(
                cfg.concurrent_sources,
                cfg.budget_bytes,
                n,
                &sources[pos..],
                arena.frontier_floor(),
            )?;
            let wave = &sources[pos..pos + k];
            let layout = arena.repartition(wave)?.clone();
            state.begin_wave(&layout)?;
            stats.effective_concurrency = match stats.effective_concurrency {
                0 => k,
                c => c.min(k),
            };
            stats.waves += 1;

            let mut batch = FrontierBatch::new(layout.frontier_capacity, &cfg.spill, cfg.checked)?;
            for (slot, &src) in wave.iter().enumerate() {
                state.init_source(g, slot, src, &mut batch)?;
                stats.traversed_edges += g.degree(src as usize) as u64;
            }
            stats.spill_events += batch.spill_store().spill_events();
            stats.spilled_entries += batch.spill_store().spilled_total();

            while !batch.is_empty() {
                let (next, b) = self.process_batch(g, &state, &mut batch)?;
                if cfg.checked && batch.spill_store().conservation_holds() == Some(false) {
                    return Err(Error::InvariantViolation(
                        "spilled and reloaded frontiers differ".into(),
                    ));
                }
                stats.iterations += 1;
                stats.traversed_edges += b.traversed_edges;
                stats.maxid_updates += b.maxid_updates;
                stats.re_relaxations += b.re_relaxations;
                stats.fills += b.fills;
                stats.spill_events += b.spill_events;
                stats.spilled_entries += b.spilled_entries;
                stats.reloaded_entries += b.reloaded_entries;
                batch = next;
            }

            for slot in 0..k {
                let ins = state.frontier_insertions(slot);
                stats.frontier_insertions += ins;
                stats.per_source_frontier.push((state.src(slot), ins));
                rows.push(state.finish_slot(slot));
            }
            if cfg.checked {
                let violations = audit_monotonicity(&mut state.take_update_log());
                stats.monotonicity_violations += violations as u64;
                if violations > 0 {
                    return Err(Error::InvariantViolation(format!(
                        "{violations} non-monotone maxId updates"
                    )));
                }
            }
            pos += k;
        }
        stats.high_water_mark = arena.high_water_mark();
        stats.epoch_reinits = state.reinit_count();
        Ok(RunOutput { rows, stats })
    }
}

/// One-shot convenience over [`Engine::run_multi_source`].
pub fn run_multi_source(
    g: &CsrGraph,
    sources: &[Vertex],
    config: &EngineConfig,
) -> Result<RunOutput> {
    Engine::new(config.clone())?.run_multi_source(g, sources)
}

/// Every row of `g`.
pub fn factorize(g: &CsrGraph, config: &EngineConfig) -> Result<(FillStructure, EngineStats)> {
    let sources: Vec<Vertex> = (0..g.n() as Vertex).collect();
    let out = run_multi_source(g, &sources, config)?;
    let stats = out.stats.clone();
    Ok((out.into_structure(g.n()), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig7_graph;
    use crate::memory::Arena;
    use crate::reference::{brute_force_fills, fill2_row};

    fn entries(b: &mut FrontierBatch) -> Vec<Vertex> {
        let mut v: Vec<_> = b.entries().unwrap().into_iter().map(|e| e.0).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn batch_iterations_for_source_8() {
        let g = fig7_graph();
        let engine = Engine::new(EngineConfig::default()).unwrap();
        let layout = Arena::new(g.n(), None, 16)
            .repartition(&[8])
            .unwrap()
            .clone();
        let mut st = TraversalState::new(g.n(), u64::MAX, true).unwrap();
        st.begin_wave(&layout).unwrap();
        let mut batch = FrontierBatch::unbounded();
        st.init_source(&g, 0, 8, &mut batch).unwrap();

        let (mut b1, _) = engine.process_batch(&g, &st, &mut batch).unwrap();
        assert_eq!(entries(&mut b1), vec![0, 3, 4, 5]);
        assert!(st.is_stamped(0, 3) && st.is_stamped(0, 5) && !st.is_stamped(0, 4));

        let (mut b2, _) = engine.process_batch(&g, &st, &mut b1).unwrap();
        assert_eq!(entries(&mut b2), vec![4]);

        let (b3, _) = engine.process_batch(&g, &st, &mut b2).unwrap();
        assert!(b3.is_empty());
    }

    #[test]
    fn empty_batch_yields_empty_batch() {
        let g = fig7_graph();
        let engine = Engine::new(EngineConfig::default()).unwrap();
        let st = TraversalState::new(g.n(), u64::MAX, false).unwrap();
        let (next, stats) = engine
            .process_batch(&g, &st, &mut FrontierBatch::unbounded())
            .unwrap();
        assert!(next.is_empty());
        assert_eq!(stats.traversed_edges, 0);
    }

    #[test]
    fn all_sources_match_brute_force() {
        let g = fig7_graph();
        let (fs, stats) = factorize(
            &g,
            &EngineConfig {
                checked: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fs, brute_force_fills(&g).unwrap());
        assert_eq!(fs.lower(8), &[1, 2, 3, 4, 5, 7]);
        assert_eq!(stats.monotonicity_violations, 0);
    }

    #[test]
    fn single_slot_rows_equal_fill2() {
        let g = fig7_graph();
        let cfg = EngineConfig {
            concurrent_sources: 1,
            ..Default::default()
        };
        let (fs, stats) = factorize(&g, &cfg).unwrap();
        assert_eq!(stats.waves, g.n() as u64);
        for i in 0..g.n() {
            let r = fill2_row(&g, i);
            assert_eq!(fs.lower(i), &r.lower[..]);
            assert_eq!(fs.upper(i), &r.upper[..]);
        }
    }

    #[test]
    fn source_zero_has_no_lower_entries() {
        let g = fig7_graph();
        let out = run_multi_source(&g, &[0], &EngineConfig::default()).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.rows[0].lower.is_empty());
        assert_eq!(out.rows[0].upper, vec![5]);
    }

    #[test]
    fn out_of_range_source_rejected() {
        let g = fig7_graph();
        assert!(run_multi_source(&g, &[10], &EngineConfig::default()).is_err());
    }

    #[test]
    fn zero_concurrency_rejected() {
        let cfg = EngineConfig {
            concurrent_sources: 0,
            ..Default::default()
        };
        assert!(matches!(Engine::new(cfg), Err(Error::InvalidConfig(_))));
    }
}
