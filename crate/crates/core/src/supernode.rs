//! Two-phase T3 supernode detection over chunks of consecutive rows.
//!
//! Phase I marks, per row, whether `nnz(U(s,:)) == nnz(U(s-1,:)) - 1`; rows
//! failing it are leaders. The 0-bits cut the chunk into independent
//! subranges, and Phase II grows each leader through its subrange while
//! `L(s, r) != 0` and the block is below the size cap. Rows a leader cannot
//! absorb lead their own block.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::structure::FillStructure;

/// Contiguous blocks `[b_k, b_{k+1})` covering `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupernodePartition {
    n: usize,
    boundaries: Vec<usize>,
}

impl SupernodePartition {
    pub fn from_boundaries(n: usize, boundaries: Vec<usize>) -> Self {
        debug_assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
        SupernodePartition { n, boundaries }
    }

    /// Concatenate chunk-local partitions given in row order.
    pub fn concat(n: usize, parts: impl IntoIterator<Item = SupernodePartition>) -> Self {
        let mut boundaries: Vec<usize> = parts.into_iter().flat_map(|p| p.boundaries).collect();
        boundaries.sort_unstable();
        boundaries.dedup();
        SupernodePartition { n, boundaries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Leading rows, ascending.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let end = self.boundaries.last().map_or(0, |_| self.n);
        self.boundaries
            .iter()
            .enumerate()
            .map(move |(k, &b)| b..self.boundaries.get(k + 1).copied().unwrap_or(end))
    }

    /// Newline-separated leading rows.
    pub fn to_text(&self) -> String {
        self.boundaries.iter().map(|b| format!("{b}\n")).collect()
    }

    /// Re-check every block: size cap, and both T3 conditions on each
    /// non-leading row. Returns the first offending row.
    pub fn check(&self, fs: &FillStructure, max_size: usize) -> std::result::Result<(), usize> {
        let mut covered = 0;
        for block in self.blocks() {
            if block.start != covered || block.is_empty() || block.len() > max_size {
                return Err(block.start);
            }
            let r = block.start;
            for s in r + 1..block.end {
                if fs.nnz_upper(s) + 1 != fs.nnz_upper(s - 1) || !fs.has_lower(s, r) {
                    return Err(s);
                }
            }
            covered = block.end;
        }
        if covered != self.n {
            return Err(covered);
        }
        Ok(())
    }
}

/// Phase I result for one chunk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkBitmap {
    start: usize,
    bits: Vec<bool>,
    leaders: Vec<usize>,
}

impl ChunkBitmap {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn rows(&self) -> Range<usize> {
        self.start..self.start + self.bits.len()
    }

    /// Bits as a `0`/`1` string, first row first.
    pub fn to_bit_string(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

/// `bit[s] = 1` iff `nnz_u[s] == nnz_u[s-1] - 1`. The chunk's first row is
/// always a leader, so no supernode crosses a chunk boundary.
pub fn phase1_bitmap(nnz_u: &[usize], chunk: Range<usize>) -> ChunkBitmap {
    let bits: Vec<bool> = chunk
        .clone()
        .into_par_iter()
        .map(|s| s > chunk.start && nnz_u[s] + 1 == nnz_u[s - 1])
        .collect();
    let leaders = bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| !b)
        .map(|(k, _)| chunk.start + k)
        .collect();
    ChunkBitmap {
        start: chunk.start,
        bits,
        leaders,
    }
}

/// Grow every Phase I leader through its run of 1-bits. Runs are
/// independent and processed in parallel.
pub fn phase2_grow<F>(bitmap: &ChunkBitmap, lower_lookup: F, max_size: usize) -> SupernodePartition
where
    F: Fn(usize, usize) -> bool + Sync,
{
    let max_size = max_size.max(1);
    let rows = bitmap.rows();
    let run_end = |k: usize| bitmap.leaders.get(k + 1).copied().unwrap_or(rows.end);
    let mut boundaries: Vec<usize> = (0..bitmap.leaders.len())
        .into_par_iter()
        .flat_map_iter(|k| {
            let end = run_end(k);
            let mut leader = bitmap.leaders[k];
            let mut local = vec![leader];
            for s in leader + 1..end {
                if s - leader >= max_size || !lower_lookup(s, leader) {
                    leader = s;
                    local.push(s);
                }
            }
            local
        })
        .collect();
    boundaries.sort_unstable();
    SupernodePartition::from_boundaries(rows.end, boundaries)
}

/// Phase I then Phase II on `chunk`. Returned boundaries are absolute row
/// indices; `n()` of the result is the chunk end.
pub fn detect_chunk(
    fs: &FillStructure,
    chunk: Range<usize>,
    max_size: usize,
) -> Result<SupernodePartition> {
    if let Some(first) = chunk.clone().find(|&s| !fs.is_row_done(s)) {
        let last = chunk
            .clone()
            .rev()
            .find(|&s| !fs.is_row_done(s))
            .unwrap_or(first);
        return Err(Error::MissingRows { first, last });
    }
    // the predecessor of the chunk start is never consulted (bit forced to 0)
    let lo = chunk.start.saturating_sub(1);
    let mut nnz_u = vec![0usize; chunk.end];
    for (s, slot) in nnz_u.iter_mut().enumerate().skip(lo) {
        *slot = fs.nnz_upper(s);
    }
    let bitmap = phase1_bitmap(&nnz_u, chunk);
    Ok(phase2_grow(&bitmap, |s, r| fs.has_lower(s, r), max_size))
}

/// [`detect_chunk`] over consecutive chunks of `chunk_size` rows.
pub fn detect_all(
    fs: &FillStructure,
    chunk_size: usize,
    max_size: usize,
) -> Result<SupernodePartition> {
    let n = fs.n();
    let chunk_size = chunk_size.max(1);
    let parts = (0..n)
        .step_by(chunk_size)
        .map(|start| detect_chunk(fs, start..(start + chunk_size).min(n), max_size))
        .collect::<Result<Vec<_>>>()?;
    Ok(SupernodePartition::concat(n, parts))
}
