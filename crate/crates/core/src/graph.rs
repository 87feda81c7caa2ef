//! Structure-only adjacency of `G(A)` in compressed sparse row form.
//!
//! One vertex per row/column of `A`; an edge `i -> j` for every off-diagonal
//! nonzero `A(i, j)`. Diagonal entries are not edges: they are kept in a
//! separate per-row flag.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Vertex = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsrGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<Vertex>,
    diag: Vec<bool>,
}

impl CsrGraph {
    /// Empty graph on `n` vertices with no diagonal flags set.
    pub fn empty(n: usize) -> Self {
        CsrGraph {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            diag: vec![false; n],
        }
    }

    /// Build from arbitrary `(row, col)` coordinates. Duplicates are merged
    /// and diagonal entries are folded into the per-row flags.
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut diag = vec![false; n];
        let mut pairs: Vec<(Vertex, Vertex)> = Vec::new();
        for (r, c) in entries {
            if r >= n || c >= n {
                return Err(Error::Range {
                    row: r,
                    col: c,
                    nrows: n,
                    ncols: n,
                });
            }
            if r == c {
                diag[r] = true;
            } else {
                pairs.push((r as Vertex, c as Vertex));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _) in &pairs {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = pairs.into_iter().map(|(_, c)| c).collect();
        Ok(CsrGraph {
            n,
            row_ptr,
            col_idx,
            diag,
        })
    }

    /// Assemble from raw CSR arrays, validating every invariant.
    pub fn from_raw(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<Vertex>,
        diag: Vec<bool>,
    ) -> Result<Self> {
        if row_ptr.len() != n + 1 {
            return Err(Error::Dimension {
                expected: n + 1,
                actual: row_ptr.len(),
            });
        }
        if diag.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: diag.len(),
            });
        }
        if row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(Error::InvariantViolation(
                "row_ptr must start at 0 and end at nnz".into(),
            ));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvariantViolation(format!(
                    "row_ptr decreases at row {i}"
                )));
            }
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for (k, &c) in row.iter().enumerate() {
                if c as usize >= n {
                    return Err(Error::Range {
                        row: i,
                        col: c as usize,
                        nrows: n,
                        ncols: n,
                    });
                }
                if c as usize == i {
                    return Err(Error::InvariantViolation(format!(
                        "self edge stored in row {i}"
                    )));
                }
                if k > 0 && row[k - 1] >= c {
                    return Err(Error::InvariantViolation(format!(
                        "row {i} is not strictly increasing"
                    )));
                }
            }
        }
        Ok(CsrGraph {
            n,
            row_ptr,
            col_idx,
            diag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (off-diagonal) edges.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[Vertex] {
        &self.col_idx
    }

    pub fn diagonal_flags(&self) -> &[bool] {
        &self.diag
    }

    pub fn has_diagonal(&self, v: usize) -> bool {
        self.diag[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[Vertex] {
        &self.col_idx[self.row_ptr[v]..self.row_ptr[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.row_ptr[v + 1] - self.row_ptr[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as Vertex)).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v as usize)))
    }

    /// Same graph with every diagonal flag set.
    pub fn with_full_diagonal(mut self) -> Self {
        self.diag.iter_mut().for_each(|d| *d = true);
        self
    }

    /// Edge `(u, v)` present iff `(v, u)` is present in `self`.
    pub fn transpose(&self) -> CsrGraph {
        let mut row_ptr = vec![0usize; self.n + 1];
        for &c in &self.col_idx {
            row_ptr[c as usize + 1] += 1;
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0 as Vertex; self.col_idx.len()];
        // rows are visited in increasing order, so every transposed row comes out sorted
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                let slot = &mut next[v as usize];
                col_idx[*slot] = u as Vertex;
                *slot += 1;
            }
        }
        CsrGraph {
            n: self.n,
            row_ptr,
            col_idx,
            diag: self.diag.clone(),
        }
    }

    /// Structure of `P_r * A * P_c`: entry `(i, j)` of the result is
    /// `A(row_perm[i], col_perm[j])`. Diagonal flags take part as ordinary
    /// entries, so a diagonal of `A` may become an off-diagonal edge.
    pub fn permute(&self, row_perm: &Permutation, col_perm: &Permutation) -> Result<CsrGraph> {
        for p in [row_perm, col_perm] {
            if p.len() != self.n {
                return Err(Error::Dimension {
                    expected: self.n,
                    actual: p.len(),
                });
            }
        }
        let row_inv = row_perm.inverse();
        let col_inv = col_perm.inverse();
        let entries = (0..self.n)
            .filter(|&i| self.diag[i])
            .map(|i| (i, i))
            .chain(self.edges())
            .map(|(r, c)| (row_inv.get(r), col_inv.get(c)));
        CsrGraph::from_entries(self.n, entries)
    }

    /// Text form: `n nnz` header, the row_ptr line, the col_idx line.
    /// Diagonal flags are not carried.
    pub fn to_csr_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.nnz());
        out.push_str(&join(self.row_ptr.iter()));
        out.push('\n');
        out.push_str(&join(self.col_idx.iter()));
        out.push('\n');
        out
    }

    /// Inverse of [`CsrGraph::to_csr_text`]. Every diagonal is flagged
    /// present, matching the assumption the engines make.
    pub fn from_csr_text(text: &str) -> Result<CsrGraph> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?;
        let head = parse_numbers::<usize>(header, 1)?;
        let [n, nnz] = head[..] else {
            return Err(Error::parse(1, "expected `n nnz`"));
        };
        let row_ptr = parse_numbers::<usize>(lines.next().unwrap_or(""), 2)?;
        let col_idx = parse_numbers::<Vertex>(lines.next().unwrap_or(""), 3)?;
        if col_idx.len() != nnz {
            return Err(Error::Dimension {
                expected: nnz,
                actual: col_idx.len(),
            });
        }
        CsrGraph::from_raw(n, row_ptr, col_idx, vec![true; n])
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_numbers<T: std::str::FromStr>(line: &str, lineno: usize) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| Error::parse(lineno, format!("bad integer `{tok}`")))
        })
        .collect()
}

/// `perm[new] = old`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            perm: (0..n).collect(),
        }
    }

    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n {
                return Err(Error::InvalidPermutation(format!(
                    "entry {new} maps to {old}, outside [0, {n})"
                )));
            }
            if std::mem::replace(&mut seen[old], true) {
                return Err(Error::InvalidPermutation(format!(
                    "index {old} appears more than once"
                )));
            }
        }
        Ok(Permutation { perm })
    }

    /// Identity with positions `a` and `b` exchanged.
    pub fn swap(n: usize, a: usize, b: usize) -> Self {
        let mut p = Self::identity(n);
        p.perm.swap(a, b);
        p
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    #[inline]
    pub fn get(&self, new: usize) -> usize {
        self.perm[new]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.perm.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            inv[old] = new;
        }
        Permutation { perm: inv }
    }

    /// One 0-based index per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut perm = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            perm.push(
                line.parse::<usize>()
                    .map_err(|_| Error::parse(i + 1, format!("bad permutation entry `{line}`")))?,
            );
        }
        Permutation::new(perm)
    }

    pub fn to_text(&self) -> String {
        self.perm.iter().map(|p| format!("{p}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_strips_diagonal_and_merges_duplicates() {
        let g = CsrGraph::from_entries(3, [(1, 0), (1, 0), (2, 2), (0, 2), (0, 1)]).unwrap();
        assert_eq!(g.nnz(), 3);
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.neighbors(1), &[0]);
        assert!(g.neighbors(2).is_empty());
        assert_eq!(g.diagonal_flags(), &[false, false, true]);
    }

    #[test]
    fn out_of_range_entry_rejected() {
        let err = CsrGraph::from_entries(2, [(0, 2)]).unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
    }

    #[test]
    fn transpose_of_empty_and_single_edge() {
        let e = CsrGraph::empty(0);
        assert_eq!(e.transpose(), e);
        let g = CsrGraph::from_entries(2, [(1, 0)]).unwrap();
        let t = g.transpose();
        assert_eq!(t.neighbors(0), &[1]);
        assert!(t.neighbors(1).is_empty());
    }

    #[test]
    fn identity_permutation_is_noop() {
        let g = CsrGraph::from_entries(4, [(0, 1), (2, 3), (3, 0), (1, 1)]).unwrap();
        let id = Permutation::identity(4);
        assert_eq!(g.permute(&id, &id).unwrap(), g);
    }

    #[test]
    fn row_and_column_swaps_move_diagonal_entry() {
        // rows 2<->3, columns 2<->7 on a 10x10 pattern: A(2,2) lands at (3,7)
        let g = CsrGraph::from_entries(10, (0..10).map(|i| (i, i))).unwrap();
        let p = g
            .permute(&Permutation::swap(10, 2, 3), &Permutation::swap(10, 2, 7))
            .unwrap();
        assert!(p.has_edge(3, 7));
        assert!(!p.has_diagonal(3));
        assert!(!p.has_diagonal(2));
    }

    #[test]
    fn permutation_validation() {
        assert!(matches!(
            Permutation::new(vec![0, 0, 1]),
            Err(Error::InvalidPermutation(_))
        ));
        assert!(matches!(
            Permutation::new(vec![0, 3]),
            Err(Error::InvalidPermutation(_))
        ));
        let g = CsrGraph::empty(3);
        let short = Permutation::identity(2);
        assert!(matches!(
            g.permute(&short, &Permutation::identity(3)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn csr_text_round_trip() {
        let g = CsrGraph::from_entries(4, [(0, 1), (2, 3), (3, 0), (3, 2)])
            .unwrap()
            .with_full_diagonal();
        let text = g.to_csr_text();
        assert_eq!(text, "4 4\n0 1 1 2 4\n1 3 0 2\n");
        assert_eq!(CsrGraph::from_csr_text(&text).unwrap(), g);
    }

    #[test]
    fn raw_validation_rejects_unsorted_rows() {
        let err = CsrGraph::from_raw(3, vec![0, 2, 2, 2], vec![2, 1], vec![false; 3]).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
    }
}
