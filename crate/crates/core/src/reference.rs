//! Sequential reference kernels used as correctness oracles.
//!
//! * [`fill1_all`] walks the partially filled structure row by row.
//! * [`fill2_row`] walks the original graph with increasing thresholds.
//! * [`brute_force_fills`] checks the fill-path condition directly.
//! * [`sequential_supernodes`] is the left-to-right T3 scan.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, Vertex};
use crate::structure::{FillStructure, RowStructure};
use crate::supernode::SupernodePartition;

/// Largest `n` accepted by [`brute_force_fills`].
pub const BRUTE_FORCE_LIMIT: usize = 4096;

const UNMARKED: usize = usize::MAX;

fn push_entry(row: &mut RowStructure, src: usize, j: usize) {
    if j < src {
        row.lower.push(j as Vertex);
    } else {
        row.upper.push(j as Vertex);
    }
}

/// Rows in increasing order; each row is a breadth traversal over the
/// already completed rows' `U` structure, continuing only through vertices
/// below the source.
pub fn fill1_all(g: &CsrGraph) -> FillStructure {
    fill1_all_counted(g).0
}

/// [`fill1_all`] plus the number of adjacency entries scanned.
pub fn fill1_all_counted(g: &CsrGraph) -> (FillStructure, u64) {
    let n = g.n();
    let mut fs = FillStructure::new(n);
    let mut mark = vec![UNMARKED; n];
    let mut queue = VecDeque::new();
    let mut scanned = 0u64;
    for src in 0..n {
        let mut row = RowStructure {
            row: src,
            ..Default::default()
        };
        mark[src] = src;
        for &w in g.neighbors(src) {
            let w = w as usize;
            scanned += 1;
            mark[w] = src;
            push_entry(&mut row, src, w);
            if w < src {
                queue.push_back(w);
            }
        }
        while let Some(k) = queue.pop_front() {
            for &j in fs.upper(k) {
                let j = j as usize;
                scanned += 1;
                if mark[j] != src {
                    mark[j] = src;
                    push_entry(&mut row, src, j);
                    if j < src {
                        queue.push_back(j);
                    }
                }
            }
        }
        fs.set_row(row);
    }
    (fs, scanned)
}

/// One row computed on the original graph. Threshold vertices are taken in
/// strictly increasing order (smallest reached, unprocessed vertex first);
/// from each threshold `t` the search runs through newly reached vertices
/// below `t`, and every newly reached vertex above `t` is a structure entry.
pub fn fill2_row(g: &CsrGraph, src: usize) -> RowStructure {
    let mut mark = vec![false; g.n()];
    fill2_row_with(g, src, &mut mark, &mut 0).0
}

fn fill2_row_with(
    g: &CsrGraph,
    src: usize,
    mark: &mut [bool],
    scanned: &mut u64,
) -> (RowStructure, Vec<usize>) {
    let mut row = RowStructure {
        row: src,
        ..Default::default()
    };
    let mut touched = vec![src];
    mark[src] = true;
    for &w in g.neighbors(src) {
        let w = w as usize;
        *scanned += 1;
        mark[w] = true;
        touched.push(w);
        push_entry(&mut row, src, w);
    }

    let mut stack = Vec::new();
    let mut last_threshold: Option<usize> = None;
    loop {
        // smallest reached vertex below src not yet used as a threshold
        let from = last_threshold.map_or(0, |t| t + 1);
        let Some(t) = (from..src).find(|&v| mark[v]) else {
            break;
        };
        last_threshold = Some(t);
        stack.push(t);
        while let Some(v) = stack.pop() {
            for &w in g.neighbors(v) {
                let w = w as usize;
                *scanned += 1;
                if mark[w] {
                    continue;
                }
                mark[w] = true;
                touched.push(w);
                if w > t {
                    push_entry(&mut row, src, w);
                } else {
                    stack.push(w);
                }
            }
        }
    }
    (row.sorted(), touched)
}

/// Every row through [`fill2_row`].
pub fn fill2_all(g: &CsrGraph) -> FillStructure {
    fill2_all_counted(g).0
}

pub fn fill2_all_counted(g: &CsrGraph) -> (FillStructure, u64) {
    let n = g.n();
    let mut mark = vec![false; n];
    let mut scanned = 0u64;
    let mut fs = FillStructure::new(n);
    for src in 0..n {
        let (row, touched) = fill2_row_with(g, src, &mut mark, &mut scanned);
        for v in touched {
            mark[v] = false;
        }
        fs.set_row(row);
    }
    (fs, scanned)
}

/// `(i, j)` is in the structure iff it is an edge of `g` or some path
/// `i ⇝ j` has every intermediate vertex below `min(i, j)`.
///
/// For each row `i` and each bound `b ≤ i` a plain BFS from `i` expands
/// only vertices `< b`; column `j < i` is decided with bound `j`, columns
/// `j > i` with bound `i`.
pub fn brute_force_fills(g: &CsrGraph) -> Result<FillStructure> {
    brute_force_fills_counted(g).map(|(fs, _)| fs)
}

pub fn brute_force_fills_counted(g: &CsrGraph) -> Result<(FillStructure, u64)> {
    let n = g.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    let mut scanned = 0u64;
    let mut fs = FillStructure::new(n);
    for i in 0..n {
        let mut row = RowStructure {
            row: i,
            ..Default::default()
        };
        for bound in 0..=i {
            seen.iter_mut().for_each(|s| *s = false);
            seen[i] = true;
            queue.clear();
            queue.push_back(i);
            while let Some(v) = queue.pop_front() {
                for &w in g.neighbors(v) {
                    let w = w as usize;
                    scanned += 1;
                    if !seen[w] {
                        seen[w] = true;
                        if w < bound {
                            queue.push_back(w);
                        }
                    }
                }
            }
            if bound < i {
                if seen[bound] {
                    row.lower.push(bound as Vertex);
                }
            } else {
                row.upper
                    .extend((i + 1..n).filter(|&j| seen[j]).map(|j| j as Vertex));
            }
        }
        fs.set_row(row);
    }
    Ok((fs, scanned))
}

/// Greedy left-to-right T3 scan: row `s` joins the supernode led by `r`
/// iff `nnz(U(s,:)) == nnz(U(s-1,:)) - 1`, `L(s, r) != 0` and the block is
/// still below `max_size`.
pub fn sequential_supernodes(fs: &FillStructure, max_size: usize) -> SupernodePartition {
    sequential_supernodes_chunked(fs, max_size, usize::MAX)
}

/// [`sequential_supernodes`] with a forced new supernode at every multiple
/// of `chunk_size`.
pub fn sequential_supernodes_chunked(
    fs: &FillStructure,
    max_size: usize,
    chunk_size: usize,
) -> SupernodePartition {
    let max_size = max_size.max(1);
    let n = fs.n();
    let mut boundaries = Vec::new();
    let mut leader = 0usize;
    for s in 0..n {
        let joins = s > 0
            && s % chunk_size != 0
            && s - leader < max_size
            && fs.nnz_upper(s) + 1 == fs.nnz_upper(s - 1)
            && fs.has_lower(s, leader);
        if !joins {
            leader = s;
            boundaries.push(s);
        }
    }
    SupernodePartition::from_boundaries(n, boundaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fig7_graph, fig8_graph};

    fn row(fs: &FillStructure, i: usize) -> (Vec<Vertex>, Vec<Vertex>) {
        (fs.lower(i).to_vec(), fs.upper(i).to_vec())
    }

    #[test]
    fn fill1_row8_of_example() {
        let fs = fill1_all(&fig7_graph());
        assert_eq!(row(&fs, 8), (vec![1, 2, 3, 4, 5, 7], vec![9]));
        // (1,5) comes from 1 -> 0 -> 5 and is what row 8 travels through
        assert_eq!(row(&fs, 1), (vec![0], vec![5]));
    }

    #[test]
    fn fill2_row8_and_row0() {
        let g = fig7_graph();
        let r = fill2_row(&g, 8);
        assert_eq!(r.lower, vec![1, 2, 3, 4, 5, 7]);
        assert_eq!(r.upper, vec![9]);
        let r0 = fill2_row(&g, 0);
        assert!(r0.lower.is_empty());
        assert_eq!(r0.upper, vec![5]);
    }

    #[test]
    fn brute_force_example_fills() {
        let g = fig7_graph();
        let fs = brute_force_fills(&g).unwrap();
        let fills: Vec<_> = fs.fill_entries(&g).collect();
        for f in [(1, 5), (8, 3), (8, 4), (8, 5)] {
            assert!(fills.contains(&f), "missing fill {f:?}");
        }
    }

    #[test]
    fn diagonal_only_has_no_fill() {
        let g = CsrGraph::from_entries(5, (0..5).map(|i| (i, i))).unwrap();
        for fs in [fill1_all(&g), fill2_all(&g), brute_force_fills(&g).unwrap()] {
            assert_eq!(fs.nnz_offdiag(), 0);
        }
    }

    #[test]
    fn star_out_of_zero_has_no_fill() {
        let g = CsrGraph::from_entries(6, (1..6).map(|j| (0, j))).unwrap();
        let fs = brute_force_fills(&g).unwrap();
        assert_eq!(fs.fill_count(&g), 0);
    }

    #[test]
    fn complete_graph_has_no_fill() {
        let n = 7;
        let g =
            CsrGraph::from_entries(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j)))).unwrap();
        let fs = brute_force_fills(&g).unwrap();
        assert_eq!(fs.fill_count(&g), 0);
        assert_eq!(fs.nnz_offdiag(), n * (n - 1));
    }

    #[test]
    fn guard_enforced() {
        let g = CsrGraph::empty(BRUTE_FORCE_LIMIT + 1);
        assert!(matches!(
            brute_force_fills(&g),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn example_rows_0_and_1_form_a_supernode() {
        let fs = fill1_all(&fig8_graph());
        let p = sequential_supernodes(&fs, 128);
        assert_eq!(&p.boundaries()[..3], &[0, 2, 3]);
    }

    #[test]
    fn max_size_one_gives_singletons() {
        let fs = fill1_all(&fig8_graph());
        let p = sequential_supernodes(&fs, 1);
        assert_eq!(p.boundaries(), (0..fs.n()).collect::<Vec<_>>());
    }
}
