//! Chunked source scheduling across simulated nodes and workers.
//!
//! Rows are cut into chunks of `chunk_size`; chunk `k` belongs to node
//! `k mod nodes`. A node keeps `concurr_chunks_per_node` chunks active,
//! enough that `chunk_size * concurr_chunks_per_node` covers the
//! `concurrent_per_worker * workers_per_node` sources its workers run at
//! once. The rows of the active chunks are dealt to workers round-robin,
//! so each worker mixes cheap early rows with expensive late ones. When
//! every row of a chunk is done, supernodes are detected inside it on the
//! owning node.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::engine::{Engine, EngineConfig, EngineStats};
use crate::error::{Error, Result};
use crate::graph::{CsrGraph, Vertex};
use crate::structure::FillStructure;
use crate::supernode::{detect_chunk, SupernodePartition};

/// How a node deals the rows of its active chunks to its workers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interleaving {
    /// Row `k` of the window goes to worker `k mod workers`.
    #[default]
    RoundRobin,
    /// Each worker takes one contiguous slice of the window.
    Block,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub n: usize,
    pub chunk_size: usize,
    pub workers_per_node: usize,
    pub nodes: usize,
    pub concurrent_per_worker: usize,
    pub concurr_chunks_per_node: usize,
    /// Owning node of each chunk.
    pub chunk_node: Vec<usize>,
}

pub fn plan_chunks(
    n: usize,
    chunk_size: usize,
    workers_per_node: usize,
    nodes: usize,
    concurrent_per_worker: usize,
) -> Result<SchedulePlan> {
    let params = [
        ("n", n),
        ("chunk size", chunk_size),
        ("workers per node", workers_per_node),
        ("nodes", nodes),
        ("concurrent sources per worker", concurrent_per_worker),
    ];
    if let Some((name, _)) = params.iter().find(|(_, v)| *v == 0) {
        return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
    }
    let concurr_chunks_per_node = (concurrent_per_worker * workers_per_node).div_ceil(chunk_size);
    let chunks = n.div_ceil(chunk_size);
    Ok(SchedulePlan {
        n,
        chunk_size,
        workers_per_node,
        nodes,
        concurrent_per_worker,
        concurr_chunks_per_node,
        chunk_node: (0..chunks).map(|k| k % nodes).collect(),
    })
}

impl SchedulePlan {
    pub fn num_chunks(&self) -> usize {
        self.chunk_node.len()
    }

    pub fn chunk_rows(&self, k: usize) -> std::ops::Range<usize> {
        let start = k * self.chunk_size;
        start..(start + self.chunk_size).min(self.n)
    }

    /// Chunks owned by `node`, ascending.
    pub fn chunks_of(&self, node: usize) -> Vec<usize> {
        (0..self.num_chunks())
            .filter(|&k| self.chunk_node[k] == node)
            .collect()
    }

    /// Successive sets of chunks a node keeps active together.
    pub fn windows(&self, node: usize) -> Vec<Vec<usize>> {
        self.chunks_of(node)
            .chunks(self.concurr_chunks_per_node)
            .map(<[usize]>::to_vec)
            .collect()
    }

    /// Per-worker source lists for one window of chunks.
    pub fn worker_sources(&self, window: &[usize], mode: Interleaving) -> Vec<Vec<Vertex>> {
        let rows: Vec<Vertex> = window
            .iter()
            .flat_map(|&k| self.chunk_rows(k))
            .map(|r| r as Vertex)
            .collect();
        let w = self.workers_per_node;
        let mut out = vec![Vec::new(); w];
        match mode {
            Interleaving::RoundRobin => {
                for (i, &r) in rows.iter().enumerate() {
                    out[i % w].push(r);
                }
            }
            Interleaving::Block => {
                let per = rows.len().div_ceil(w).max(1);
                for (i, part) in rows.chunks(per).enumerate() {
                    out[i].extend_from_slice(part);
                }
            }
        }
        out
    }

    /// `(node, worker)` of every row.
    pub fn assignment(&self, mode: Interleaving) -> Vec<(usize, usize)> {
        let mut out = vec![(usize::MAX, usize::MAX); self.n];
        for node in 0..self.nodes {
            for window in self.windows(node) {
                for (w, rows) in self.worker_sources(&window, mode).into_iter().enumerate() {
                    for r in rows {
                        out[r as usize] = (node, w);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    /// `concurrent_sources` is taken from the plan.
    pub engine: EngineConfig,
    pub max_supernode: usize,
    pub interleaving: Interleaving,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            engine: EngineConfig::default(),
            max_supernode: 128,
            interleaving: Interleaving::RoundRobin,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    /// Traversed edges per second of fill detection.
    pub teps: f64,
    pub traversed_edges: u64,
    /// Node-major: worker `w` of node `d` is entry `d * workers_per_node + w`.
    pub per_worker_edges: Vec<u64>,
    /// Entries of `L + U` absent from `A`.
    pub fills: u64,
    pub supernodes: u64,
    pub spill_events: u64,
    pub iterations: u64,
    pub high_water_mark: usize,
    pub effective_concurrency: usize,
    pub epoch_reinits: u64,
    pub maxid_updates: u64,
    pub re_relaxations: u64,
    pub frontier_insertions: u64,
    /// Frontier entries queued for each row's source, by row.
    pub frontier_profile: Vec<u64>,
    /// Slowest node's time in fill detection.
    pub fill_seconds: f64,
    /// Slowest node's time in supernode detection.
    pub supernode_seconds: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub per_worker_edges: Vec<u64>,
    /// Busiest over idlest worker; 1.0 when all are equal.
    pub max_min_ratio: f64,
    pub frontier_profile: Vec<u64>,
    pub total_frontier_insertions: u64,
    pub teps: f64,
}

pub fn balance_report(stats: &PipelineStats) -> BalanceReport {
    let max = stats.per_worker_edges.iter().copied().max().unwrap_or(0);
    let min = stats.per_worker_edges.iter().copied().min().unwrap_or(0);
    let max_min_ratio = match (max, min) {
        (0, _) => 1.0,
        (_, 0) => f64::INFINITY,
        (a, b) => a as f64 / b as f64,
    };
    BalanceReport {
        per_worker_edges: stats.per_worker_edges.clone(),
        max_min_ratio,
        frontier_profile: stats.frontier_profile.clone(),
        total_frontier_insertions: stats.frontier_profile.iter().sum(),
        teps: stats.teps,
    }
}

struct NodeOutput {
    rows: Vec<crate::structure::RowStructure>,
    parts: Vec<SupernodePartition>,
    workers: Vec<EngineStats>,
    fill_time: Duration,
    supernode_time: Duration,
}

fn run_node(
    g: &CsrGraph,
    plan: &SchedulePlan,
    config: &PipelineConfig,
    node: usize,
) -> Result<NodeOutput> {
    let engine_cfg = EngineConfig {
        concurrent_sources: plan.concurrent_per_worker,
        ..config.engine.clone()
    };
    let engines = (0..plan.workers_per_node)
        .map(|_| Engine::new(engine_cfg.clone()))
        .collect::<Result<Vec<_>>>()?;
    // node-local view of finished rows; only this node's chunks are ever read
    let mut local = FillStructure::new(g.n());
    let mut out = NodeOutput {
        rows: Vec::new(),
        parts: Vec::new(),
        workers: vec![EngineStats::default(); plan.workers_per_node],
        fill_time: Duration::ZERO,
        supernode_time: Duration::ZERO,
    };

    for window in plan.windows(node) {
        let lists = plan.worker_sources(&window, config.interleaving);
        let t = Instant::now();
        let results: Vec<Result<crate::engine::RunOutput>> = std::thread::scope(|s| {
            let handles: Vec<_> = engines
                .iter()
                .zip(&lists)
                .map(|(e, list)| s.spawn(move || e.run_multi_source(g, list)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        });
        out.fill_time += t.elapsed();
        for (w, r) in results.into_iter().enumerate() {
            let r = r?;
            out.workers[w].merge(&r.stats);
            for row in r.rows {
                local.set_row(row.clone());
                out.rows.push(row);
            }
        }

        let t = Instant::now();
        for &k in &window {
            out.parts.push(detect_chunk(
                &local,
                plan.chunk_rows(k),
                config.max_supernode,
            )?);
        }
        out.supernode_time += t.elapsed();
    }
    Ok(out)
}

/// Fill detection and supernode detection for every row under `plan`.
pub fn run_pipeline(
    g: &CsrGraph,
    plan: &SchedulePlan,
    config: &PipelineConfig,
) -> Result<(FillStructure, SupernodePartition, PipelineStats)> {
    if plan.n != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            actual: plan.n,
        });
    }
    if config.max_supernode == 0 {
        return Err(Error::InvalidConfig(
            "max supernode size must be at least 1".into(),
        ));
    }
    let start = Instant::now();
    let outputs: Vec<Result<NodeOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..plan.nodes)
            .map(|node| s.spawn(move || run_node(g, plan, config, node)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("node thread panicked"))
            .collect()
    });
    let wall = start.elapsed();

    let n = g.n();
    let mut fs = FillStructure::new(n);
    let mut parts = Vec::new();
    let mut stats = PipelineStats {
        frontier_profile: vec![0; n],
        wall_seconds: wall.as_secs_f64(),
        ..Default::default()
    };
    let mut fill_time = Duration::ZERO;
    let mut sn_time = Duration::ZERO;
    for out in outputs {
        let out = out?;
        for row in out.rows {
            fs.set_row(row);
        }
        parts.extend(out.parts);
        for w in &out.workers {
            stats.per_worker_edges.push(w.traversed_edges);
            stats.traversed_edges += w.traversed_edges;
            stats.spill_events += w.spill_events;
            stats.iterations += w.iterations;
            stats.high_water_mark = stats.high_water_mark.max(w.high_water_mark);
            if w.effective_concurrency > 0 {
                stats.effective_concurrency = match stats.effective_concurrency {
                    0 => w.effective_concurrency,
                    c => c.min(w.effective_concurrency),
                };
            }
            stats.epoch_reinits += w.epoch_reinits;
            stats.maxid_updates += w.maxid_updates;
            stats.re_relaxations += w.re_relaxations;
            stats.frontier_insertions += w.frontier_insertions;
            for &(src, ins) in &w.per_source_frontier {
                stats.frontier_profile[src as usize] += ins;
            }
        }
        fill_time = fill_time.max(out.fill_time);
        sn_time = sn_time.max(out.supernode_time);
    }
    parts.sort_by_key(|p| p.boundaries().first().copied());
    let partition = SupernodePartition::concat(n, parts);
    stats.fills = fs.fill_count(g) as u64;
    stats.supernodes = partition.len() as u64;
    stats.fill_seconds = fill_time.as_secs_f64();
    stats.supernode_seconds = sn_time.as_secs_f64();
    stats.teps = if stats.fill_seconds > 0.0 {
        stats.traversed_edges as f64 / stats.fill_seconds
    } else {
        0.0
    };
    Ok((fs, partition, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig7_graph;
    use crate::generate::{erdos_renyi, skewed};
    use crate::reference::{brute_force_fills, sequential_supernodes_chunked};

    #[test]
    fn concurrent_chunks_per_node() {
        let p = plan_chunks(100_000, 128, 6, 1, 1024).unwrap();
        assert_eq!(p.concurr_chunks_per_node, 48);
        assert_eq!(p.chunk_size * p.concurr_chunks_per_node, 1024 * 6);
        assert_eq!(
            plan_chunks(10, 64, 1, 1, 64)
                .unwrap()
                .concurr_chunks_per_node,
            1
        );
    }

    #[test]
    fn partial_last_chunk() {
        let p = plan_chunks(1000, 128, 2, 3, 16).unwrap();
        assert_eq!(p.num_chunks(), 8);
        assert_eq!(p.chunk_rows(7), 896..1000);
        assert_eq!(p.chunk_rows(7).len(), 104);
        assert_eq!(p.chunk_node, vec![0, 1, 2, 0, 1, 2, 0, 1]);
        let assign = p.assignment(Interleaving::RoundRobin);
        for k in 0..p.num_chunks() {
            assert!(p.chunk_rows(k).all(|r| assign[r].0 == p.chunk_node[k]));
        }
        assert!(assign.iter().all(|&(d, w)| d < 3 && w < 2));
    }

    #[test]
    fn zero_parameters_rejected() {
        for args in [
            (0, 1, 1, 1, 1),
            (1, 0, 1, 1, 1),
            (1, 1, 0, 1, 1),
            (1, 1, 1, 0, 1),
            (1, 1, 1, 1, 0),
        ] {
            assert!(matches!(
                plan_chunks(args.0, args.1, args.2, args.3, args.4),
                Err(Error::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn round_robin_deals_rows() {
        let p = plan_chunks(8, 4, 2, 1, 4).unwrap();
        let lists = p.worker_sources(&[0, 1], Interleaving::RoundRobin);
        assert_eq!(lists, vec![vec![0, 2, 4, 6], vec![1, 3, 5, 7]]);
        let lists = p.worker_sources(&[0, 1], Interleaving::Block);
        assert_eq!(lists, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
    }

    #[test]
    fn degenerate_plan_matches_oracles() {
        let g = erdos_renyi(40, 0.08, 11);
        let p = plan_chunks(40, 8, 1, 1, 64).unwrap();
        let (fs, sn, stats) = run_pipeline(
            &g,
            &p,
            &PipelineConfig {
                max_supernode: 8,
                ..Default::default()
            },
        )
        .unwrap();
        let oracle = brute_force_fills(&g).unwrap();
        assert_eq!(fs, oracle);
        assert_eq!(sn, sequential_supernodes_chunked(&oracle, 8, 8));
        assert_eq!(stats.per_worker_edges.len(), 1);
        assert_eq!(balance_report(&stats).max_min_ratio, 1.0);
        assert_eq!(
            stats.frontier_profile.iter().sum::<u64>(),
            stats.frontier_insertions
        );
    }

    #[test]
    fn outputs_invariant_under_plan() {
        let g = skewed(60, 0.01, 0.15, 3);
        let base = PipelineConfig {
            max_supernode: 8,
            ..Default::default()
        };
        let p0 = plan_chunks(60, 8, 1, 1, 4).unwrap();
        let (f0, s0, _) = run_pipeline(&g, &p0, &base).unwrap();
        for (nodes, workers, mode) in [
            (2, 1, Interleaving::RoundRobin),
            (3, 2, Interleaving::Block),
            (2, 3, Interleaving::RoundRobin),
        ] {
            let p = plan_chunks(60, 8, workers, nodes, 4).unwrap();
            let cfg = PipelineConfig {
                interleaving: mode,
                ..base.clone()
            };
            let (f, s, st) = run_pipeline(&g, &p, &cfg).unwrap();
            assert_eq!(f, f0);
            assert_eq!(s, s0);
            assert_eq!(st.per_worker_edges.len(), nodes * workers);
        }
    }

    #[test]
    fn example_graph_any_plan() {
        let g = fig7_graph();
        let p = plan_chunks(10, 4, 2, 2, 2).unwrap();
        let (fs, _, _) = run_pipeline(
            &g,
            &p,
            &PipelineConfig {
                max_supernode: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fs, brute_force_fills(&g).unwrap());
    }
}
