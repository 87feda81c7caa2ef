//! Symbolic factorization for sparse LU: the nonzero structure of `L + U`
//! and its T3 supernodes, computed by multi-source fill-path traversal.

pub mod engine;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod graph;
pub mod memory;
pub mod mtx;
pub mod reference;
pub mod schedule;
pub mod structure;
pub mod supernode;

pub use engine::{
    factorize, run_multi_source, AccessOrder, Engine, EngineConfig, EngineStats, RunOutput,
};
pub use error::{Error, Result};
pub use graph::{CsrGraph, Permutation, Vertex};
pub use memory::SpillBackend;
pub use schedule::{
    balance_report, plan_chunks, run_pipeline, Interleaving, PipelineConfig, PipelineStats,
    SchedulePlan,
};
pub use structure::{FillStructure, RowStructure};
pub use supernode::SupernodePartition;
