//! Algorithm dispatch shared by the subcommands.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;
use symfact_core::engine::EngineConfig;
use symfact_core::memory::arena::DEFAULT_FRONTIER_FLOOR;
use symfact_core::reference::{brute_force_fills_counted, fill1_all_counted, fill2_all_counted};
use symfact_core::supernode::detect_all;
use symfact_core::{
    plan_chunks, run_pipeline, AccessOrder, CsrGraph, FillStructure, Interleaving, PipelineConfig,
    PipelineStats, Result, SpillBackend, SupernodePartition,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Row-by-row merge of earlier U rows.
    Fill1,
    /// Per-row threshold traversal.
    Fill2,
    /// Fine-grained multi-source traversal with scheduling.
    #[value(alias = "fine-grained")]
    Gsofa,
    /// Brute-force path enumeration (small inputs only).
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InterleaveArg {
    RoundRobin,
    Block,
}

/// Knobs shared by every subcommand that runs an algorithm.
#[derive(Clone, Debug, Args)]
pub struct RunConfig {
    #[arg(long, value_enum, default_value = "gsofa")]
    pub algorithm: Algorithm,
    /// Rows per scheduling chunk.
    #[arg(long, default_value_t = 128)]
    pub chunk_size: usize,
    /// Largest supernode, in rows.
    #[arg(long, default_value_t = 128)]
    pub max_supernode: usize,
    #[arg(long, default_value_t = 1)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1)]
    pub workers_per_node: usize,
    /// Sources each worker traverses together.
    #[arg(long, default_value_t = 64)]
    pub concurrent_per_worker: usize,
    /// Threads relaxing one worker's frontier batch.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, value_enum, default_value = "round-robin")]
    pub interleave: InterleaveArg,
    /// Arena budget per worker; unbounded when absent.
    #[arg(long)]
    pub budget_bytes: Option<usize>,
    /// Minimum resident frontier entries a wave must fit.
    #[arg(long, default_value_t = DEFAULT_FRONTIER_FLOOR)]
    pub frontier_floor: usize,
    /// Directory for file-backed frontier spill; in memory when absent.
    #[arg(long)]
    pub spill_path: Option<PathBuf>,
    /// Test the fill mark before updating maxId.
    #[arg(long)]
    pub fill_check_first: bool,
    /// Audit maxId monotonicity, arena layouts and spill conservation.
    #[arg(long)]
    pub checked: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunConfig {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            engine: EngineConfig {
                concurrent_sources: self.concurrent_per_worker,
                threads: self.threads,
                access_order: if self.fill_check_first {
                    AccessOrder::FillFirst
                } else {
                    AccessOrder::MaxIdFirst
                },
                checked: self.checked,
                budget_bytes: self.budget_bytes,
                frontier_floor: self.frontier_floor,
                spill: self
                    .spill_path
                    .clone()
                    .map_or(SpillBackend::Memory, SpillBackend::File),
                ..EngineConfig::default()
            },
            max_supernode: self.max_supernode,
            interleaving: match self.interleave {
                InterleaveArg::RoundRobin => Interleaving::RoundRobin,
                InterleaveArg::Block => Interleaving::Block,
            },
        }
    }
}

pub struct Outcome {
    pub structure: FillStructure,
    pub supernodes: SupernodePartition,
    pub stats: PipelineStats,
}

/// Run `algorithm` on `g`. Every algorithm reports the same stats schema;
/// the sequential ones count as a single worker.
pub fn run(g: &CsrGraph, algorithm: Algorithm, cfg: &RunConfig) -> Result<Outcome> {
    if algorithm == Algorithm::Gsofa {
        let plan = plan_chunks(
            g.n().max(1),
            cfg.chunk_size,
            cfg.workers_per_node,
            cfg.nodes,
            cfg.concurrent_per_worker,
        )?;
        if g.n() == 0 {
            return Ok(empty_outcome());
        }
        let (structure, supernodes, stats) = run_pipeline(g, &plan, &cfg.pipeline())?;
        return Ok(Outcome {
            structure,
            supernodes,
            stats,
        });
    }

    let start = Instant::now();
    let (structure, edges) = match algorithm {
        Algorithm::Fill1 => fill1_all_counted(g),
        Algorithm::Fill2 => fill2_all_counted(g),
        Algorithm::Oracle => brute_force_fills_counted(g)?,
        Algorithm::Gsofa => unreachable!(),
    };
    let fill_seconds = start.elapsed().as_secs_f64();
    let t = Instant::now();
    let supernodes = detect_all(&structure, cfg.chunk_size.max(1), cfg.max_supernode.max(1))?;
    let supernode_seconds = t.elapsed().as_secs_f64();
    let stats = PipelineStats {
        teps: if fill_seconds > 0.0 {
            edges as f64 / fill_seconds
        } else {
            0.0
        },
        traversed_edges: edges,
        per_worker_edges: vec![edges],
        fills: structure.fill_count(g) as u64,
        supernodes: supernodes.len() as u64,
        effective_concurrency: 1,
        frontier_profile: vec![0; g.n()],
        fill_seconds,
        supernode_seconds,
        wall_seconds: start.elapsed().as_secs_f64(),
        ..Default::default()
    };
    Ok(Outcome {
        structure,
        supernodes,
        stats,
    })
}

fn empty_outcome() -> Outcome {
    Outcome {
        structure: FillStructure::new(0),
        supernodes: SupernodePartition::from_boundaries(0, Vec::new()),
        stats: PipelineStats::default(),
    }
}
